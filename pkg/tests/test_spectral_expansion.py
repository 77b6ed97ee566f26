import json
import math

import numpy as np
import pytest

import spectral_expansion
from graph_core import Graph, complete_graph, cycle_graph, edge_boundary, hypercube, random_regular
from spectral_expansion import (ExpansionProperty, Method, SpectralError, Verdict, brute_force_expansion,
                                certify, enumerate_connected_sets, harper_certify, harper_lower_bound,
                                local_size_bound, second_eigenvalue, spectral_certify)

TWO_TRIANGLES = Graph.from_edges(6, [(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5)])


def test_property_constructors_validate():
    with pytest.raises(ValueError):
        ExpansionProperty.p1(0)
    with pytest.raises(ValueError):
        ExpansionProperty.p2(1.5, 3)
    with pytest.raises(ValueError):
        ExpansionProperty.p2(0.5, 0)
    prop = ExpansionProperty.p2(0.25, 100)
    assert prop.max_size(16) == 16
    assert prop.demanded(2, 4) == pytest.approx(6.0)
    assert ExpansionProperty.p1(2).max_size(9) == 4


def test_local_size_bound_uses_natural_log():
    assert local_size_bound(1, 10, 1024) == 69
    assert local_size_bound(0.5, 4, 100) == math.floor(2 * math.log(100))


def test_dense_eigenvalues_of_hypercube():
    gap = second_eigenvalue(hypercube(4))
    assert gap.solver == "dense"
    assert gap.lambda2 == pytest.approx(2.0, abs=1e-9)
    assert gap.lambda_min == pytest.approx(-4.0, abs=1e-9)
    assert gap.nontrivial_radius == pytest.approx(4.0, abs=1e-9)
    assert gap.residual < 1e-8


def test_cycle_second_eigenvalue():
    gap = second_eigenvalue(cycle_graph(6))
    assert gap.lambda2 == pytest.approx(1.0, abs=1e-9)
    assert gap.lambda_min == pytest.approx(-2.0, abs=1e-9)


def complete_bipartite(a):
    return Graph.from_edges(2 * a, [(i, a + j) for i in range(a) for j in range(a)])


@pytest.mark.parametrize("n", [3, 5, 8])
def test_complete_graph_eigenvalues(n):
    gap = second_eigenvalue(complete_graph(n))
    assert gap.lambda2 == pytest.approx(-1.0, abs=1e-8)
    assert gap.lambda_min == pytest.approx(-1.0, abs=1e-8)


@pytest.mark.parametrize("a", [2, 3, 6])
def test_complete_bipartite_eigenvalues(a):
    gap = second_eigenvalue(complete_bipartite(a))
    assert gap.lambda2 == pytest.approx(0.0, abs=1e-8)
    assert gap.lambda_min == pytest.approx(-a, abs=1e-8)


def test_lanczos_path_matches_dense(monkeypatch):
    monkeypatch.setattr(spectral_expansion, "DENSE_LIMIT", 10)
    gap = second_eigenvalue(hypercube(6))
    assert gap.solver == "lanczos"
    assert gap.lambda2 == pytest.approx(4.0, abs=1e-6)
    assert gap.lambda_min == pytest.approx(-6.0, abs=1e-6)


def test_lanczos_on_random_regular_agrees_with_dense(monkeypatch):
    G = random_regular(60, 4, seed=3)
    dense = second_eigenvalue(G)
    monkeypatch.setattr(spectral_expansion, "DENSE_LIMIT", 10)
    sparse = second_eigenvalue(G)
    assert sparse.lambda2 == pytest.approx(dense.lambda2, abs=1e-6)
    assert sparse.lambda_min == pytest.approx(dense.lambda_min, abs=1e-6)


def test_lanczos_rejects_inaccurate_eigenpairs(monkeypatch):
    solve = spectral_expansion.eigsh

    def off_by_a_tenth(*args, **kwargs):
        values, vectors = solve(*args, **kwargs)
        return values + 0.1, vectors

    monkeypatch.setattr(spectral_expansion, "DENSE_LIMIT", 10)
    monkeypatch.setattr(spectral_expansion, "eigsh", off_by_a_tenth)
    with pytest.raises(SpectralError, match="residual"):
        second_eigenvalue(hypercube(6))


def test_second_eigenvalue_rejects_bad_graphs():
    with pytest.raises(SpectralError):
        second_eigenvalue(Graph.from_edges(3, [(0, 1), (1, 2)]))
    with pytest.raises(SpectralError):
        second_eigenvalue(TWO_TRIANGLES)


def test_spectral_certify_p1():
    Q4 = hypercube(4)
    gap = second_eigenvalue(Q4)
    cert = spectral_certify(Q4, gap, ExpansionProperty.p1(1.0))
    assert cert.verdict is Verdict.CERTIFIED
    assert cert.method is Method.SPECTRAL
    assert cert.details["certified_c"] == pytest.approx(1.0, abs=1e-8)
    assert spectral_certify(Q4, gap, ExpansionProperty.p1(1.5)).verdict is Verdict.UNKNOWN


def test_spectral_certify_p2():
    Q4 = hypercube(4)
    gap = second_eigenvalue(Q4)
    assert spectral_certify(Q4, gap, ExpansionProperty.p2(0.6, 1)).verdict is Verdict.CERTIFIED
    unknown = spectral_certify(Q4, gap, ExpansionProperty.p2(0.5, 1))
    assert unknown.verdict is Verdict.UNKNOWN
    assert unknown.details["lhs"] == pytest.approx(1.875, abs=1e-8)
    assert unknown.details["rhs"] == pytest.approx(2.0)


@pytest.mark.parametrize("seed", range(20))
def test_spectral_bound_holds_on_random_regular_graphs(seed):
    G = random_regular(100, 8, seed=seed)
    gap = second_eigenvalue(G)
    cert = spectral_certify(G, gap, ExpansionProperty.p1(1.0))
    rng = np.random.default_rng(seed)
    for _ in range(50):
        size = int(rng.integers(1, G.n))
        U = rng.choice(G.n, size=size, replace=False)
        boundary = edge_boundary(G, U)
        assert boundary >= size * (1 - size / G.n) * (8 - gap.lambda2) - 1e-9
        if size <= G.n // 2:
            assert boundary >= cert.details["certified_c"] * size - 1e-9


def test_connected_set_enumeration_on_cycle():
    sets = list(enumerate_connected_sets(cycle_graph(6), 6))
    assert len(sets) == 31
    assert len({frozenset(s) for s, _ in sets}) == 31
    for members, boundary in sets:
        assert boundary == (0 if len(members) == 6 else 2)
    assert len(list(enumerate_connected_sets(cycle_graph(6), 2))) == 12


def test_connected_sets_of_ten_cycle_are_its_arcs():
    by_size = {}
    for members, _ in enumerate_connected_sets(cycle_graph(10), 5):
        by_size[len(members)] = by_size.get(len(members), 0) + 1
    assert by_size == {1: 10, 2: 10, 3: 10, 4: 10, 5: 10}


def test_enumerated_boundaries_respect_harper():
    for members, boundary in enumerate_connected_sets(hypercube(4), 4):
        assert boundary >= harper_lower_bound(4, len(members))


def test_brute_force_refutes_with_most_violating_witness():
    cert = brute_force_expansion(cycle_graph(6), 6, ExpansionProperty.p1(1.0))
    assert cert.verdict is Verdict.REFUTED
    assert cert.method is Method.BRUTE
    assert cert.witness == (0, 1, 2)
    assert cert.witness_boundary == 2


def test_brute_force_witness_is_the_longest_violating_arc():
    C8 = cycle_graph(8)
    cert = brute_force_expansion(C8, 4, ExpansionProperty.p1(2.1))
    assert cert.verdict is Verdict.REFUTED
    assert cert.witness == (0, 1, 2, 3)
    assert cert.witness_boundary == 2
    assert edge_boundary(C8, cert.witness) < 2.1 * 4


def test_brute_force_witness_on_two_disjoint_cliques():
    K4 = complete_graph(4)
    G = Graph.from_edges(8, list(K4.edges) + [(u + 4, v + 4) for u, v in K4.edges])
    cert = brute_force_expansion(G, 4, ExpansionProperty.p1(0.1))
    assert cert.verdict is Verdict.REFUTED
    assert cert.witness == (0, 1, 2, 3)
    assert cert.witness_boundary == 0


def test_brute_force_certifies_hypercube_local_expansion():
    cert = brute_force_expansion(hypercube(6), 4, ExpansionProperty.p2(0.34, 4))
    assert cert.verdict is Verdict.CERTIFIED
    assert cert.method is Method.BRUTE
    assert cert.details["checked_up_to"] == 4


def test_brute_force_certifies_only_over_full_range():
    Q3 = hypercube(3)
    full = brute_force_expansion(Q3, 4, ExpansionProperty.p1(1.0))
    assert full.verdict is Verdict.CERTIFIED
    assert full.details["checked_up_to"] == 4
    partial = brute_force_expansion(Q3, 2, ExpansionProperty.p1(1.0))
    assert partial.verdict is Verdict.UNKNOWN
    assert partial.details["checked_up_to"] == 2


def test_brute_force_budget():
    cert = brute_force_expansion(cycle_graph(6), 6, ExpansionProperty.p1(1.0), budget=5)
    assert cert.verdict is Verdict.UNKNOWN
    assert cert.details["budget_exhausted"] is True


def test_brute_force_p2_needs_regular_graph():
    with pytest.raises(ValueError):
        brute_force_expansion(Graph.from_edges(3, [(0, 1)]), 2, ExpansionProperty.p2(0.5, 2))
    with pytest.raises(ValueError):
        brute_force_expansion(hypercube(3), 0, ExpansionProperty.p1(1.0))


@pytest.mark.parametrize("u, bound", [(1, 6), (2, 10), (3, 14), (4, 16), (5, 19), (64, 0)])
def test_harper_lower_bound(u, bound):
    assert harper_lower_bound(6, u) == bound


def test_harper_lower_bound_domain():
    with pytest.raises(ValueError):
        harper_lower_bound(3, 9)


def test_harper_certify():
    Q6 = hypercube(6)
    assert harper_certify(Q6, ExpansionProperty.p2(0.5, 8)).verdict is Verdict.CERTIFIED
    assert harper_certify(Q6, ExpansionProperty.p2(0.5, 9)).verdict is Verdict.UNKNOWN
    assert harper_certify(Q6, ExpansionProperty.p1(1.0)).method is Method.HARPER
    assert harper_certify(Q6, ExpansionProperty.p1(1.5)).verdict is Verdict.UNKNOWN
    assert harper_certify(cycle_graph(6), ExpansionProperty.p1(1.0)).verdict is Verdict.UNKNOWN


def test_certify_falls_through_strategies():
    cert = certify(cycle_graph(6), ExpansionProperty.p1(1.0))
    assert cert.verdict is Verdict.REFUTED
    assert cert.witness == (0, 1, 2)
    results = [a["result"] for a in cert.details["attempts"]]
    assert results == ["skipped: not a hypercube", "unknown", "refuted"]


def test_certify_treats_spectral_failure_as_unknown():
    cert = certify(TWO_TRIANGLES, ExpansionProperty.p1(0.5), ("spectral", "brute"))
    assert cert.verdict is Verdict.REFUTED
    assert cert.witness == (0, 1, 2)
    assert cert.witness_boundary == 0
    assert cert.details["attempts"][0]["result"].startswith("unknown")


def test_certify_prefers_harper_on_hypercubes():
    cert = certify(hypercube(5), ExpansionProperty.p1(1.0))
    assert cert.method is Method.HARPER


@pytest.mark.parametrize("order", [(), ("brute", "brute"), ("magic",)])
def test_certify_rejects_bad_strategy_order(order):
    with pytest.raises(ValueError):
        certify(hypercube(3), ExpansionProperty.p1(1.0), order)


def test_certificate_json():
    cert = certify(hypercube(4), ExpansionProperty.p1(1.0), ("spectral",))
    text = cert.to_json()
    assert text.endswith("\n")
    data = json.loads(text)
    assert data["verdict"] == "certified"
    assert data["method"] == "spectral"
    assert data["spectral"]["solver"] == "dense"
    assert data["property"] == {"kind": "p1", "c": 1.0}
    assert list(data) == sorted(data)


def test_harper_bound_is_attained_by_subcubes():
    smallest = {}
    for members, boundary in enumerate_connected_sets(hypercube(6), 4):
        size = len(members)
        smallest[size] = min(boundary, smallest.get(size, boundary))
    for size in (1, 2, 4):
        assert smallest[size] == harper_lower_bound(6, size)
    assert smallest[3] >= harper_lower_bound(6, 3)

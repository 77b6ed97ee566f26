"""
percolation_process.py - Percolation and Random Graph Process Module

Edge percolation samples G_p, the sprinkled union G_p1 u G_p2, the random
edge-arrival process G(0), G(1), ..., G(m), the threshold formulas for the
minimum-degree and tightness experiments, hitting-time extraction and the
k-connectivity test.

Randomness: one numpy PCG64 stream per seed, uniforms consumed in canonical
edge order. Edge e is kept in G_p iff u_e < p.
"""

import itertools
import math
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import networkx as nx
import numpy as np
from networkx.algorithms.connectivity import build_auxiliary_node_connectivity, local_node_connectivity
from networkx.algorithms.flow import build_residual_network
from scipy import stats
from scipy.cluster.hierarchy import DisjointSet
from scipy.sparse import csgraph

from graph_core import Graph
from lab_utils import LabError

EXHAUSTIVE_MAX_EDGES = 8
SMALL_CONNECTIVITY_MAX_N = 14


class DomainError(LabError, ValueError):
    """Probability, degree or threshold parameters outside their domain"""


class TraceFormatError(LabError, ValueError):
    """Malformed trace record"""


def _check_probability(p: float, name: str = "p"):
    if not 0.0 <= p <= 1.0 or math.isnan(p):
        raise DomainError(f"{name} must lie in [0, 1], got {p}")


@dataclass(frozen=True, eq=False)
class PercolationSample:
    """
    Retained edges of one percolation draw

    retained holds sorted canonical edge indices of host. draw is the row of
    the seed's stream the sample came from (0 for single draws).
    """
    host: Graph
    retained: np.ndarray
    p: float
    seed: int | None
    draw: int = 0

    @property
    def size(self) -> int:
        return int(self.retained.size)

    @cached_property
    def degrees(self) -> np.ndarray:
        ends = self.host.edge_array[self.retained]
        return np.bincount(ends.ravel(), minlength=self.host.n)

    @cached_property
    def graph(self) -> Graph:
        return self.host.edge_subgraph(self.retained)


@dataclass(frozen=True, eq=False)
class ProcessTrace:
    """Random edge-arrival order over the host; G(i) keeps the first i edges of order"""
    host: Graph
    order: np.ndarray
    seed: int | None

    def prefix_edges(self, i: int) -> np.ndarray:
        if not 0 <= i <= self.host.m:
            raise DomainError(f"prefix length must lie in [0, {self.host.m}], got {i}")
        return self.order[:i]

    def prefix_graph(self, i: int) -> Graph:
        return self.host.edge_subgraph(self.prefix_edges(i))


@dataclass(frozen=True)
class HittingTimes:
    k: int
    tau_k: int
    tau_kc: int

    @property
    def equal(self) -> bool:
        return self.tau_k == self.tau_kc


class ThresholdValue(NamedTuple):
    p: float
    dp: float


# ---------------- Sampling ---------------- #

def percolate(G: Graph, p: float, seed: int) -> PercolationSample:
    """Keep each edge independently with probability p (u_e < p, canonical edge order)"""
    _check_probability(p)
    rng = np.random.default_rng(seed)
    retained = np.flatnonzero(rng.random(G.m) < p)
    return PercolationSample(G, retained, p, seed)


def percolation_masks(G: Graph, p: float, seed: int, count: int) -> np.ndarray:
    """(count, m) boolean keep-masks from one stream; row 0 matches percolate(G, p, seed)"""
    _check_probability(p)
    if count < 1:
        raise DomainError(f"count must be positive, got {count}")
    return np.random.default_rng(seed).random((count, G.m)) < p


def union_masks(G: Graph, p1: float, p2: float, seed: int, count: int) -> np.ndarray:
    """(count, m) keep-masks of G_p1 u G_p2; each row consumes round 1 then round 2"""
    _check_probability(p1, "p1")
    _check_probability(p2, "p2")
    if count < 1:
        raise DomainError(f"count must be positive, got {count}")
    uniforms = np.random.default_rng(seed).random((count, 2, G.m))
    return (uniforms[:, 0, :] < p1) | (uniforms[:, 1, :] < p2)


def percolate_batch(G: Graph, p: float, seed: int, count: int) -> list:
    """count samples from one stream; sample 0 equals percolate(G, p, seed)"""
    masks = percolation_masks(G, p, seed, count)
    return [PercolationSample(G, np.flatnonzero(row), p, seed, i) for i, row in enumerate(masks)]


def union_sample(G: Graph, p1: float, p2: float, seed: int) -> PercolationSample:
    """
    G_p1 u G_p2 from two independent rounds drawn from the same stream (round 1 first)

    Distributed as percolate(G, 1 - (1-p1)(1-p2)).
    """
    _check_probability(p1, "p1")
    _check_probability(p2, "p2")
    rng = np.random.default_rng(seed)
    first = rng.random(G.m) < p1
    second = rng.random(G.m) < p2
    p = 1.0 - (1.0 - p1) * (1.0 - p2)
    return PercolationSample(G, np.flatnonzero(first | second), p, seed)


def union_sample_batch(G: Graph, p1: float, p2: float, seed: int, count: int) -> list:
    masks = union_masks(G, p1, p2, seed, count)
    p = 1.0 - (1.0 - p1) * (1.0 - p2)
    return [PercolationSample(G, np.flatnonzero(row), p, seed, i) for i, row in enumerate(masks)]


# ---------------- Threshold formulas ---------------- #

def mindeg_threshold_p(n: int, d: int, phi: float | None = None) -> ThresholdValue:
    """
    p = 1 - (phi/n)^(1/d), so that n(1-p)^d = phi

    phi defaults to ln n. Returns d*p alongside for the d*p = O(log n) sanity log.
    """
    if phi is None:
        phi = math.log(n) if n > 0 else 0.0
    if d < 1:
        raise DomainError(f"d must be at least 1, got {d}")
    if not 1 < phi < n:
        raise DomainError(f"need 1 < phi < n, got phi={phi}, n={n}")
    p = -math.expm1(math.log(phi / n) / d)
    return ThresholdValue(p, d * p)


def construction_threshold_p(n: int, d: int) -> float:
    """p = 1 - (n ln d)^(-1/d), so that n(1-p)^d = 1/ln d"""
    if d < 3:
        raise DomainError(f"d must be at least 3, got {d}")
    if n < 1:
        raise DomainError(f"n must be positive, got {n}")
    return -math.expm1(-math.log(n * math.log(d)) / d)


def sprinkle_split(p: float, d: int) -> tuple:
    """(p1, p2) with p2 = 1/d and (1-p1)(1-p2) = 1-p"""
    _check_probability(p)
    if d < 2:
        raise DomainError(f"d must be at least 2, got {d}")
    p2 = 1.0 / d
    if p < p2:
        raise DomainError(f"p={p} is below 1/d={p2}")
    p1 = min(1.0, max(0.0, (p - p2) / (1.0 - p2)))
    return p1, p2


def expected_isolated_vertices(n: int, d: int, p: float) -> float:
    """n(1-p)^d: expected isolated vertices of G_p on a d-regular host"""
    _check_probability(p)
    return n * (1.0 - p) ** d


def expected_low_degree_vertices(n: int, d: int, p: float, k: int) -> float:
    """n Pr[Bin(d, p) <= k-1]: expected vertices of G_p with degree below k"""
    _check_probability(p)
    if k < 1:
        raise DomainError(f"k must be at least 1, got {k}")
    return n * float(stats.binom.cdf(k - 1, d, p))


def gadget_cut_probability_bound(n: int, d: int, d1: int, p: float) -> float:
    """
    (1 - (1-p)^(d-d1))^(n/(d+2)) = Pr[no gadget is cut from its hub]

    Each of the n/(d+2) hubs loses all d-d1 of its attachment edges with
    probability (1-p)^(d-d1); the attachment edge sets are disjoint.
    """
    _check_probability(p)
    if not 0 <= d1 < d:
        raise DomainError(f"need 0 <= d1 < d, got d1={d1}, d={d}")
    return (1.0 - (1.0 - p) ** (d - d1)) ** (n / (d + 2))


# ---------------- Edge process ---------------- #

def process_permutation(G: Graph, seed: int) -> ProcessTrace:
    """Uniform random order of G's edges, deterministic per seed"""
    if G.m < 1:
        raise DomainError("the edge process needs at least one edge")
    order = np.random.default_rng(seed).permutation(G.m)
    return ProcessTrace(G, order, seed)


def all_orderings(G: Graph):
    """Every one of the m! traces of G, in lexicographic order of the permutation"""
    if not 1 <= G.m <= EXHAUSTIVE_MAX_EDGES:
        raise DomainError(f"exhaustive mode needs 1 <= m <= {EXHAUSTIVE_MAX_EDGES}, got m={G.m}")
    for perm in itertools.permutations(range(G.m)):
        yield ProcessTrace(G, np.array(perm, dtype=np.int64), None)


def write_trace(trace: ProcessTrace) -> str:
    seed = "none" if trace.seed is None else str(trace.seed)
    order = " ".join(str(i) for i in trace.order.tolist())
    return f"seed {seed}\nm {trace.host.m}\n{order}\n"


def read_trace(host: Graph, text: str) -> ProcessTrace:
    """Parse a write_trace record and replay it over host"""
    lines = text.split("\n")
    if len(lines) != 4 or lines[3] != "" or not lines[0].startswith("seed ") or not lines[1].startswith("m "):
        raise TraceFormatError("expected 'seed S', 'm M' and one permutation line")
    try:
        seed_token = lines[0][5:]
        seed = None if seed_token == "none" else int(seed_token)
        m = int(lines[1][2:])
        order = [int(t) for t in lines[2].split(" ")] if lines[2] else []
    except ValueError as e:
        raise TraceFormatError(f"bad trace record: {e}") from None
    if m != host.m:
        raise TraceFormatError(f"trace has m={m}, host has {host.m} edges")
    if sorted(order) != list(range(m)):
        raise TraceFormatError("order is not a permutation of the host's edge indices")
    return ProcessTrace(host, np.array(order, dtype=np.int64), seed)


# ---------------- Hitting times ---------------- #

def hitting_time_min_degree(trace: ProcessTrace, k: int) -> int:
    """Least i with min degree of G(i) >= k; m+1 if never"""
    if k < 1:
        raise DomainError(f"k must be at least 1, got {k}")
    host = trace.host
    if host.n == 0:
        return 0
    if host.min_degree < k:
        return host.m + 1

    degree = [0] * host.n
    deficient = host.n
    edges = host.edges
    for i, e in enumerate(trace.order.tolist(), start=1):
        u, v = edges[e]
        degree[u] += 1
        if degree[u] == k:
            deficient -= 1
        degree[v] += 1
        if degree[v] == k:
            deficient -= 1
        if deficient == 0:
            return i
    return host.m + 1




def hitting_time_connectivity(trace: ProcessTrace) -> int:
    """Least i with G(i) connected (union-find over the arrivals); m+1 if the host is disconnected"""
    host = trace.host
    if host.n <= 1:
        return 0
    if not host.connected:
        return host.m + 1

    components = host.n
    forest = DisjointSet(range(host.n))
    edges = host.edges
    for i, e in enumerate(trace.order.tolist(), start=1):
        u, v = edges[e]
        if forest.merge(u, v):
            components -= 1
            if components == 1:
                return i
    return host.m + 1


def _first_edge_and_connectivity_times(trace: ProcessTrace) -> tuple:
    """(tau_1, tau_conn) from one pass; the host must be connected on n >= 2 vertices"""
    host = trace.host
    touched = [False] * host.n
    untouched = host.n
    tau_1 = None
    components = host.n
    forest = DisjointSet(range(host.n))
    edges = host.edges
    for i, e in enumerate(trace.order.tolist(), start=1):
        u, v = edges[e]
        if tau_1 is None:
            for x in (u, v):
                if not touched[x]:
                    touched[x] = True
                    untouched -= 1
            if untouched == 0:
                tau_1 = i
        if forest.merge(u, v):
            components -= 1
            if components == 1:
                # a spanning connected G(i) has no isolated vertex
                return tau_1, i
    return host.m + 1, host.m + 1


def hitting_times(trace: ProcessTrace, k: int, assume_host_k_connected: bool = False) -> HittingTimes:
    """
    (tau_k, tau_kc) of one trace

    For k = 1 on a connected host both times come out of a single pass over
    the arrivals; the per-trial cost is then one permutation plus O(m) work.
    """
    host = trace.host
    if k == 1 and host.n >= 2 and host.connected:
        return HittingTimes(1, *_first_edge_and_connectivity_times(trace))
    tau_k = hitting_time_min_degree(trace, k)
    if k == 1:
        return HittingTimes(1, tau_k, hitting_time_connectivity(trace))
    return HittingTimes(k, tau_k, hitting_time_k_connectivity(trace, k, assume_host_k_connected))


def _to_networkx(G: Graph) -> nx.Graph:
    H = nx.Graph()
    H.add_nodes_from(range(G.n))
    H.add_edges_from(G.edges)
    return H


def is_k_connected(G: Graph, k: int) -> bool:
    """
    True iff n >= k+1, min degree >= k and no fewer than k vertices separate G

    k = 1 and k = 2 use connected components and biconnectivity. For k >= 3,
    with v_1..v_k the k smallest vertex ids, G is k-connected iff every v_i has
    k internally disjoint paths to every vertex it is not adjacent to: a
    separator of size < k misses some v_i, which it then cuts off from a
    non-neighbor. Path counts are unit max-flows on the vertex-split network,
    built once and stopped at k.
    """
    if k < 1:
        raise DomainError(f"k must be at least 1, got {k}")
    if G.n < k + 1 or G.min_degree < k:
        return False
    if k == 1:
        return G.connected
    H = _to_networkx(G)
    if k == 2:
        return nx.is_biconnected(H)

    auxiliary = build_auxiliary_node_connectivity(H)
    residual = build_residual_network(auxiliary, "capacity")
    for s in range(k):
        neighbors = G.neighbor_sets[s]
        for t in range(G.n):
            if t == s or t in neighbors:
                continue
            paths = local_node_connectivity(H, s, t, auxiliary=auxiliary, residual=residual, cutoff=k)
            if paths < k:
                return False
    return True


def hitting_time_k_connectivity(trace: ProcessTrace, k: int, assume_host_k_connected: bool = False) -> int:
    """
    Least i with G(i) k-connected; m+1 if the host is not

    k-connectivity is monotone under edge addition, so binary search over
    [max(tau_k, n-1), m]. The lower end is tried first since it usually wins.
    """
    host = trace.host
    if not assume_host_k_connected and not is_k_connected(host, k):
        return host.m + 1

    lo = max(hitting_time_min_degree(trace, k), host.n - 1)
    hi = host.m
    if lo > hi:
        return host.m + 1
    if is_k_connected(trace.prefix_graph(lo), k):
        return lo

    # invariant: prefix lo fails, prefix hi passes
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if is_k_connected(trace.prefix_graph(mid), k):
            hi = mid
        else:
            lo = mid
    return hi


def vertex_connectivity_small(G: Graph) -> int:
    """Exact vertex connectivity by removing every vertex subset (n <= 14)"""
    if G.n > SMALL_CONNECTIVITY_MAX_N:
        raise DomainError(f"exhaustive connectivity needs n <= {SMALL_CONNECTIVITY_MAX_N}, got {G.n}")
    if G.n <= 1:
        return 0
    if G.m == G.n * (G.n - 1) // 2:
        return G.n - 1

    for size in range(G.n - 1):
        for removed in itertools.combinations(range(G.n), size):
            if not _connected_without(G, removed):
                return size
    return G.n - 1


def _connected_without(G: Graph, removed: tuple) -> bool:
    keep = np.ones(G.n, dtype=bool)
    keep[list(removed)] = False
    remaining = G.adjacency_matrix[keep][:, keep]
    count, _ = csgraph.connected_components(remaining, directed=False)
    return count == 1

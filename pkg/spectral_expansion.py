"""
spectral_expansion.py - Expansion Certification Module

Certifies or refutes the two edge-expansion hypotheses for regular graphs:

  P1(c)            e(U, U^C) >= c|U|          for every |U| <= n/2
  P2(epsilon, S)   e(U, U^C) >= (1-epsilon)d|U|  for every |U| <= S

by three routes: exhaustive enumeration of connected sets (brute), the
expander-mixing bound from the second adjacency eigenvalue (spectral), and
Harper's edge-isoperimetric inequality on hypercubes (harper).

Spectral certificate. For a d-regular G with indicator vector 1_U, write
1_U = (|U|/n)1 + f with f orthogonal to 1. Then
    e(U, U) counted twice = <1_U, A 1_U> <= d|U|^2/n + lambda_2 |f|^2
and |f|^2 = |U|(1 - |U|/n), so
    e(U, U^C) = d|U| - <1_U, A 1_U> >= |U|(1 - |U|/n)(d - lambda_2).
Only the signed lambda_2 enters, so the bound also holds on bipartite graphs.

Brute-force reduction. A disconnected U is the disjoint union of its
connected parts and e(U, U^C) is the sum of the parts' boundaries, so a
per-vertex bound e >= r|U| on every connected set of size <= s implies it
for every set of size <= s. Enumerating connected sets is enough.
"""

import json
import math
import time
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction

import numpy as np
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

from graph_core import Graph, hypercube_dimension, is_connected
from lab_logging import log_main, log_operation_performance
from lab_utils import LabError

DENSE_LIMIT = 2000
DEFAULT_TOL = 1e-8
# accepted Lanczos residual, in units of tol * max(1, d)
RESIDUAL_SLACK = 10.0
COMPARE_EPS = 1e-9
DEFAULT_BRUTE_BUDGET = 5_000_000
STRATEGIES = ("harper", "spectral", "brute")


class SpectralError(LabError, ValueError):
    """Eigensolve impossible (irregular or disconnected input) or not converged"""


class Verdict(Enum):
    CERTIFIED = "certified"
    REFUTED = "refuted"
    UNKNOWN = "unknown"


class Method(Enum):
    BRUTE = "brute"
    SPECTRAL = "spectral"
    HARPER = "harper"


@dataclass(frozen=True)
class SpectralGap:
    lambda2: float
    lambda_min: float
    residual: float
    degree: int
    n: int
    solver: str

    @property
    def nontrivial_radius(self) -> float:
        return max(abs(self.lambda2), abs(self.lambda_min))

    def to_dict(self) -> dict:
        return {
            "lambda2": self.lambda2,
            "lambda_min": self.lambda_min,
            "residual": self.residual,
            "degree": self.degree,
            "n": self.n,
            "solver": self.solver,
        }


@dataclass(frozen=True)
class ExpansionProperty:
    """P1(c) or P2(epsilon, size_bound)"""
    kind: str
    c: float | None = None
    epsilon: float | None = None
    size_bound: int | None = None

    @classmethod
    def p1(cls, c: float) -> "ExpansionProperty":
        if c <= 0:
            raise ValueError(f"P1 needs c > 0, got {c}")
        return cls("p1", c=c)

    @classmethod
    def p2(cls, epsilon: float, size_bound: int) -> "ExpansionProperty":
        if not 0 <= epsilon <= 1:
            raise ValueError(f"P2 needs 0 <= epsilon <= 1, got {epsilon}")
        if size_bound < 1:
            raise ValueError(f"P2 needs size_bound >= 1, got {size_bound}")
        return cls("p2", epsilon=epsilon, size_bound=int(size_bound))

    def max_size(self, n: int) -> int:
        """Largest |U| the property quantifies over"""
        if self.kind == "p1":
            return n // 2
        return min(self.size_bound, n)

    def demanded(self, u_size: int, d: int) -> float:
        """Lower bound the property demands for e(U, U^C) when |U| = u_size"""
        if self.kind == "p1":
            return self.c * u_size
        return (1 - self.epsilon) * d * u_size

    def to_dict(self) -> dict:
        if self.kind == "p1":
            return {"kind": "p1", "c": self.c}
        return {"kind": "p2", "epsilon": self.epsilon, "size_bound": self.size_bound}


def local_size_bound(C: float, d: int, n: int) -> int:
    """floor(C * d * ln n), the P2 size range (natural logarithm)"""
    return int(math.floor(C * d * math.log(n)))


@dataclass(frozen=True)
class ExpansionCertificate:
    property: ExpansionProperty
    verdict: Verdict
    method: Method | None = None
    witness: tuple | None = None
    witness_boundary: int | None = None
    gap: SpectralGap | None = None
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "property": self.property.to_dict(),
            "verdict": self.verdict.value,
            "method": self.method.value if self.method else None,
            "witness": list(self.witness) if self.witness is not None else None,
            "witness_boundary": self.witness_boundary,
            "spectral": self.gap.to_dict() if self.gap else None,
            "details": self.details,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"


# ---------------- Spectral route ---------------- #

def second_eigenvalue(G: Graph, tol: float = DEFAULT_TOL, maxiter: int | None = None) -> SpectralGap:
    """
    Signed second-largest and smallest adjacency eigenvalues of a connected regular graph

    n <= DENSE_LIMIT uses a dense symmetric eigensolve. Larger graphs run
    Lanczos (ARPACK) on A - (2d/n)J, which moves the all-ones eigenvalue from
    d down to -d so the top of the deflated spectrum is lambda_2.
    """
    d = G.degree_uniform
    if d is None or d < 1:
        raise SpectralError("second_eigenvalue needs a regular graph with positive degree")
    if G.n < 2 or not is_connected(G):
        raise SpectralError("second_eigenvalue needs a connected graph on at least two vertices")
    if tol <= 0:
        raise ValueError(f"tolerance must be positive, got {tol}")

    start = time.time()
    A = G.adjacency_matrix
    if G.n <= DENSE_LIMIT:
        values, vectors = np.linalg.eigh(A.toarray())
        lambda2, lambda_min = float(values[-2]), float(values[0])
        x2, xmin = vectors[:, -2], vectors[:, 0]
        residual = max(
            float(np.linalg.norm(A @ x2 - lambda2 * x2)),
            float(np.linalg.norm(A @ xmin - lambda_min * xmin)),
        )
        solver = "dense"
    else:
        shift = 2.0 * d / G.n
        deflated = LinearOperator(
            (G.n, G.n), matvec=lambda x: A @ x - shift * np.sum(x) * np.ones(G.n), dtype=np.float64)
        try:
            top, top_vec = eigsh(deflated, k=1, which="LA", tol=tol, maxiter=maxiter)
            bottom, bottom_vec = eigsh(A, k=1, which="SA", tol=tol, maxiter=maxiter)
        except ArpackNoConvergence as e:
            log_operation_performance("second_eigenvalue", f"n={G.n}", time.time() - start, False)
            raise SpectralError(f"Lanczos iteration did not converge: {e}") from e
        lambda2, lambda_min = float(top[0]), float(bottom[0])
        x2, xmin = top_vec[:, 0], bottom_vec[:, 0]
        residual = max(
            float(np.linalg.norm(deflated @ x2 - lambda2 * x2)),
            float(np.linalg.norm(A @ xmin - lambda_min * xmin)),
        )
        if not residual <= RESIDUAL_SLACK * tol * max(1.0, float(d)):
            log_operation_performance("second_eigenvalue", f"n={G.n}", time.time() - start, False)
            raise SpectralError(f"Lanczos residual {residual:.3g} exceeds tolerance {tol:.3g} * d")
        solver = "lanczos"

    log_operation_performance("second_eigenvalue", f"n={G.n} {solver}", time.time() - start)
    log_main(f"second_eigenvalue: n={G.n} d={d} lambda2={lambda2:.10g} "
             f"lambda_min={lambda_min:.10g} residual={residual:.3g} ({solver})")
    return SpectralGap(lambda2, lambda_min, residual, d, G.n, solver)


def spectral_certify(G: Graph, gap: SpectralGap, prop: ExpansionProperty) -> ExpansionCertificate:
    """
    One-sided certificate from e(U, U^C) >= |U|(1 - |U|/n)(d - lambda_2)

    Never refutes; the result is Certified(spectral) or Unknown.
    """
    d = G.degree_uniform
    if d is None:
        raise SpectralError("spectral certification needs a regular graph")
    if gap.lambda2 >= d:
        raise SpectralError(f"lambda2={gap.lambda2} >= d={d}: graph disconnected or invalid gap")

    slack = d - gap.lambda2 - gap.residual
    if prop.kind == "p1":
        certified_c = slack / 2
        ok = prop.c <= certified_c + COMPARE_EPS
        details = {"certified_c": certified_c}
    else:
        lhs = (1 - prop.size_bound / G.n) * slack
        rhs = (1 - prop.epsilon) * d
        ok = lhs + COMPARE_EPS >= rhs
        details = {"lhs": lhs, "rhs": rhs}

    verdict = Verdict.CERTIFIED if ok else Verdict.UNKNOWN
    return ExpansionCertificate(prop, verdict, Method.SPECTRAL if ok else None, gap=gap, details=details)


# ---------------- Brute-force route ---------------- #

def enumerate_connected_sets(G: Graph, max_size: int):
    """
    Yield (vertices, boundary) for every connected vertex set of size <= max_size, each once

    Rooted growth: the root is the set's minimum id; a set is extended only by
    vertices above the root that are exclusive neighbors of the vertex just
    added (not in the set and not adjacent to any earlier member).
    vertices is in insertion order.
    """
    adjacency = G.adjacency
    degrees = G.degrees.tolist()

    def extend(members, closed, extension, boundary, root):
        yield tuple(members), boundary
        if len(members) == max_size:
            return
        extension = list(extension)
        while extension:
            w = extension.pop()
            inside = sum(1 for u in adjacency[w] if u in member_set)
            new_boundary = boundary + degrees[w] - 2 * inside
            exclusive = [u for u in adjacency[w] if u > root and u not in closed]
            members.append(w)
            member_set.add(w)
            added = [u for u in adjacency[w] if u not in closed]
            closed.update(added)
            yield from extend(members, closed, extension + exclusive, new_boundary, root)
            closed.difference_update(added)
            member_set.discard(w)
            members.pop()

    for root in range(G.n):
        member_set = {root}
        closed = {root, *adjacency[root]}
        yield from extend([root], closed, [u for u in adjacency[root] if u > root], degrees[root], root)


def brute_force_expansion(G: Graph, max_size: int, prop: ExpansionProperty,
                          budget: int = DEFAULT_BRUTE_BUDGET) -> ExpansionCertificate:
    """
    Check the per-vertex bound of prop on every connected set of size <= max_size

    Refuted carries the most violating witness: lowest boundary per vertex,
    ties broken by the lexicographically least sorted vertex tuple. A clean search is Certified only if max_size covers the property's
    whole range; otherwise Unknown with checked_up_to. Exceeding budget sets
    gives Unknown with the partial progress.
    """
    if max_size < 1:
        raise ValueError(f"max_size must be positive, got {max_size}")
    d = G.degree_uniform
    if prop.kind == "p2" and d is None:
        raise ValueError("P2 needs a regular graph")

    limit = min(max_size, prop.max_size(G.n))
    start = time.time()
    best_key = None
    best = None
    counted = 0

    if limit >= 1:
        for members, boundary in enumerate_connected_sets(G, limit):
            counted += 1
            if counted > budget:
                log_operation_performance("brute_force_expansion", f"n={G.n}", time.time() - start, False)
                return ExpansionCertificate(prop, Verdict.UNKNOWN, details={
                    "budget_exhausted": True, "sets_enumerated": budget, "budget": budget})
            if boundary + COMPARE_EPS < prop.demanded(len(members), d):
                key = (Fraction(boundary, len(members)), tuple(sorted(members)))
                if best_key is None or key < best_key:
                    best_key, best = key, boundary

    log_operation_performance("brute_force_expansion", f"n={G.n} size<={limit}", time.time() - start)
    details = {"sets_enumerated": counted, "checked_up_to": limit}
    if best_key is not None:
        return ExpansionCertificate(prop, Verdict.REFUTED, Method.BRUTE, witness=best_key[1],
                                    witness_boundary=best, details=details)
    if max_size >= prop.max_size(G.n):
        return ExpansionCertificate(prop, Verdict.CERTIFIED, Method.BRUTE, details=details)
    return ExpansionCertificate(prop, Verdict.UNKNOWN, details=details)


# ---------------- Harper route ---------------- #

def harper_lower_bound(dim: int, u_size: int) -> int:
    """ceil(u (dim - log2 u)): Harper's lower bound on e(U, U^C) for |U| = u in Q^dim"""
    if dim < 1 or not 1 <= u_size <= (1 << dim):
        raise ValueError(f"need dim >= 1 and 1 <= u_size <= 2^dim, got dim={dim}, u_size={u_size}")
    return math.ceil(u_size * (dim - math.log2(u_size)) - COMPARE_EPS)


def harper_certify(G: Graph, prop: ExpansionProperty) -> ExpansionCertificate:
    """
    Certify on canonically labelled hypercubes

    P2(epsilon, S) holds whenever log2 S <= epsilon*dim, since the per-vertex
    bound dim - log2 u only decreases in u. P1(c) holds for c <= 1 because
    u <= 2^(dim-1) gives dim - log2 u >= 1.
    """
    dim = hypercube_dimension(G)
    if dim is None:
        return ExpansionCertificate(prop, Verdict.UNKNOWN, details={"reason": "not a hypercube"})

    if prop.kind == "p1":
        ok = prop.c <= 1
    else:
        ok = math.log2(prop.max_size(G.n)) <= prop.epsilon * dim + COMPARE_EPS
    if ok:
        return ExpansionCertificate(prop, Verdict.CERTIFIED, Method.HARPER, details={"dim": dim})
    return ExpansionCertificate(prop, Verdict.UNKNOWN, details={"dim": dim})


# ---------------- Driver ---------------- #

def certify(G: Graph, prop: ExpansionProperty, strategy_order=("harper", "spectral", "brute"),
            max_size: int = 6, tol: float = DEFAULT_TOL,
            budget: int = DEFAULT_BRUTE_BUDGET) -> ExpansionCertificate:
    """
    Try the strategies in order; the first Certified or Refuted verdict wins

    Harper is only attempted on graphs recognised as hypercubes. A spectral
    attempt on a disconnected or irregular graph counts as Unknown.
    """
    strategy_order = tuple(strategy_order)
    if not strategy_order or len(set(strategy_order)) != len(strategy_order) \
            or any(s not in STRATEGIES for s in strategy_order):
        raise ValueError(f"strategy order must be distinct names from {STRATEGIES}, got {strategy_order}")

    attempts = []
    for strategy in strategy_order:
        if strategy == "harper":
            if hypercube_dimension(G) is None:
                attempts.append({"strategy": "harper", "result": "skipped: not a hypercube"})
                continue
            cert = harper_certify(G, prop)
        elif strategy == "spectral":
            try:
                cert = spectral_certify(G, second_eigenvalue(G, tol), prop)
            except SpectralError as e:
                attempts.append({"strategy": "spectral", "result": f"unknown: {e}"})
                continue
        else:
            cert = brute_force_expansion(G, max_size, prop, budget)

        attempts.append({"strategy": strategy, "result": cert.verdict.value})
        if cert.verdict is not Verdict.UNKNOWN:
            log_main(f"certify {prop.to_dict()}: {cert.verdict.value} via {strategy}")
            return ExpansionCertificate(cert.property, cert.verdict, cert.method, cert.witness,
                                        cert.witness_boundary, cert.gap,
                                        {**cert.details, "attempts": attempts, "max_size": max_size})

    log_main(f"certify {prop.to_dict()}: unknown after {list(strategy_order)}")
    return ExpansionCertificate(prop, Verdict.UNKNOWN, details={"attempts": attempts, "max_size": max_size})

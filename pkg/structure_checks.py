"""
structure_checks.py - Structural Verifiers Module

Checks run on a single percolation sample G_p of a host G:
  - core structure: the vertices of sample degree >= k induce a k-connected
    graph and the low-degree outsiders are pairwise non-adjacent in G
  - low-degree distance: vertices of sample degree < k are at host distance >= 2
  - component gap: after removing a small set K no component has order in
    [2, C d ln n]
  - rooted tree counts t_m(v, G) against (e d)^(m-1)
  - maximum matchings in percolated edge sets
"""

import math
from dataclasses import dataclass, field
from enum import Enum

import networkx as nx
import numpy as np
from scipy.sparse import csgraph

from graph_core import Graph, VertexSet, edges_to_csr, vertex_set
from lab_logging import log_main
from lab_utils import LabError, split_seed
from percolation_process import DomainError, PercolationSample, is_k_connected

MAX_TREE_SIZE = 6
DEFAULT_TREE_BUDGET = 2_000_000
MATCHING_QUANTILES = (0.01, 0.05, 0.5, 0.95, 0.99)


class BudgetExceeded(LabError, RuntimeError):
    """Exhaustive enumeration grew past its budget"""


class FailureReason(Enum):
    NO_CORE = "no_core"
    MULTIPLE_BIG_COMPONENTS = "multiple_big_components"
    CORE_NOT_K_CONNECTED = "core_not_k_connected"
    OUTSIDER_DEGREE = "outsider_degree"
    OUTSIDER_DISTANCE = "outsider_distance"


@dataclass(frozen=True)
class CoreVerdict:
    passed: bool
    core: VertexSet
    outsiders: VertexSet
    max_outsider_degree: int | None
    min_pairwise_outsider_distance: int | None
    failure_reason: FailureReason | None

    def to_dict(self) -> dict:
        return {
            "pass": self.passed,
            "core_size": len(self.core),
            "outsiders": list(self.outsiders),
            "max_outsider_degree": self.max_outsider_degree,
            "min_pairwise_outsider_distance": self.min_pairwise_outsider_distance,
            "failure_reason": self.failure_reason.value if self.failure_reason else None,
        }


@dataclass(frozen=True)
class DistanceVerdict:
    passed: bool
    offending_pair: tuple | None = None

    def to_dict(self) -> dict:
        return {"pass": self.passed,
                "offending_pair": list(self.offending_pair) if self.offending_pair else None}


@dataclass(frozen=True)
class GapReport:
    """histogram maps component order -> count over G_p - K; violations are the components in the window"""
    histogram: dict
    violations: tuple
    removed: VertexSet
    window: tuple

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "pass": self.passed,
            "histogram": {str(size): count for size, count in sorted(self.histogram.items())},
            "violations": [list(c) for c in self.violations],
            "removed": list(self.removed),
            "window": list(self.window),
        }


@dataclass(frozen=True)
class TreeCount:
    vertex: int
    m_size: int
    count: int
    bound: float

    @property
    def within_bound(self) -> bool:
        return self.count <= self.bound


@dataclass(frozen=True)
class MatchingStats:
    s: int
    q: float
    trials: int
    matching_size_samples: tuple
    empirical_mean: float
    empirical_quantiles: dict
    delta2: float
    histogram: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "s": self.s,
            "q": self.q,
            "trials": self.trials,
            "matching_size_samples": list(self.matching_size_samples),
            "empirical_mean": self.empirical_mean,
            "empirical_quantiles": {str(k): v for k, v in self.empirical_quantiles.items()},
            "delta2": self.delta2,
            "histogram": {str(k): v for k, v in sorted(self.histogram.items())},
        }


def _induced(G: Graph, sample: PercolationSample, keep: np.ndarray):
    """Sample edges with both ends in keep, relabelled onto 0..|keep|-1"""
    ids = np.flatnonzero(keep)
    relabel = np.full(G.n, -1, dtype=np.int64)
    relabel[ids] = np.arange(ids.size)
    ends = G.edge_array[sample.retained]
    inside = keep[ends[:, 0]] & keep[ends[:, 1]]
    return ids, relabel[ends[inside]]


def core_structure_check(G: Graph, sample: PercolationSample, k: int) -> CoreVerdict:
    """
    S = vertices of sample degree <= k-1, core = V \\ S

    Passes iff the core is nonempty, the sample induces a k-connected graph on
    it, no two outsiders are sample neighbors, and no two outsiders are
    adjacent in G. The first failing condition in that order is reported.
    """
    if k < 1:
        raise DomainError(f"k must be at least 1, got {k}")
    degrees = sample.degrees
    deficient = degrees <= k - 1
    outsiders = tuple(np.flatnonzero(deficient).tolist())
    max_outsider_degree = int(degrees[deficient].max()) if outsiders else None
    min_distance = _min_pairwise_distance(G, outsiders)

    def verdict(reason, core=()):
        return CoreVerdict(reason is None, core, outsiders, max_outsider_degree, min_distance, reason)

    if len(outsiders) == G.n:
        return verdict(FailureReason.NO_CORE)

    ids, core_edges = _induced(G, sample, ~deficient)
    core = tuple(ids.tolist())
    core_graph = Graph._build(ids.size, sorted(map(tuple, core_edges.tolist())))
    if ids.size > 1:
        count, _ = csgraph.connected_components(core_graph.adjacency_matrix, directed=False)
        if count > 1:
            return verdict(FailureReason.MULTIPLE_BIG_COMPONENTS, core)
    if not is_k_connected(core_graph, k):
        return verdict(FailureReason.CORE_NOT_K_CONNECTED, core)

    ends = G.edge_array
    host_inside = deficient[ends[:, 0]] & deficient[ends[:, 1]]
    sample_inside = host_inside[sample.retained]
    if np.any(sample_inside):
        return verdict(FailureReason.OUTSIDER_DEGREE, core)
    if np.any(host_inside):
        return verdict(FailureReason.OUTSIDER_DISTANCE, core)
    return verdict(None, core)


def _min_pairwise_distance(G: Graph, vertices: tuple) -> int | None:
    if len(vertices) < 2:
        return None
    dist = csgraph.shortest_path(G.adjacency_matrix, directed=False, unweighted=True, indices=list(vertices))
    block = dist[:, list(vertices)]
    np.fill_diagonal(block, np.inf)
    smallest = block.min()
    return None if np.isinf(smallest) else int(smallest)


def low_degree_distance_check(G: Graph, sample: PercolationSample, k: int) -> DistanceVerdict:
    """Vertices of sample degree < k must be pairwise non-adjacent in G; reports the first host edge that violates it"""
    if k < 1:
        raise DomainError(f"k must be at least 1, got {k}")
    low = sample.degrees < k
    ends = G.edge_array
    offending = np.flatnonzero(low[ends[:, 0]] & low[ends[:, 1]])
    if offending.size:
        return DistanceVerdict(False, G.edges[int(offending[0])])
    return DistanceVerdict(True)


def component_gap_check(G: Graph, sample: PercolationSample, K, C: float, k: int | None = None) -> GapReport:
    """
    Components of G_p - K, flagging those of order in [2, C d ln n]

    d is the host degree (maximum degree on irregular hosts).
    """
    K = vertex_set(G, K)
    if k is not None and len(K) > k:
        raise DomainError(f"|K|={len(K)} exceeds k={k}")
    if C <= 0:
        raise DomainError(f"C must be positive, got {C}")

    d = G.degree_uniform if G.degree_uniform is not None else G.max_degree
    upper = C * d * math.log(G.n) if G.n > 1 else 0.0

    keep = np.ones(G.n, dtype=bool)
    keep[list(K)] = False
    ids, edges = _induced(G, sample, keep)
    if ids.size == 0:
        return GapReport({}, (), K, (2, upper))

    _, labels = csgraph.connected_components(edges_to_csr(ids.size, edges), directed=False)
    sizes = np.bincount(labels)
    histogram = {}
    for size in sizes.tolist():
        histogram[size] = histogram.get(size, 0) + 1

    violations = []
    for label in np.flatnonzero((sizes >= 2) & (sizes <= upper)).tolist():
        violations.append(tuple(ids[labels == label].tolist()))
    violations.sort()
    return GapReport(histogram, tuple(violations), K, (2, upper))


def count_rooted_trees(G: Graph, v: int, m_size: int, budget: int = DEFAULT_TREE_BUDGET) -> TreeCount:
    """
    Number of subtrees of G on m_size vertices that contain v

    Trees are grown one leaf at a time from {v} and deduplicated by edge set.
    Bound is (e d)^(m_size - 1) with d the maximum degree.
    """
    vertex_set(G, [v])
    if not 1 <= m_size <= MAX_TREE_SIZE:
        raise DomainError(f"m_size must lie in [1, {MAX_TREE_SIZE}], got {m_size}")

    level = {(frozenset(), frozenset([v]))}
    stored = 1
    for _ in range(m_size - 1):
        grown = set()
        for edges, verts in level:
            for x in verts:
                for y in G.adjacency[x]:
                    if y not in verts:
                        grown.add((edges | {(min(x, y), max(x, y))}, verts | {y}))
            if stored + len(grown) > budget:
                raise BudgetExceeded(f"tree enumeration from vertex {v} exceeded {budget} trees")
        stored += len(grown)
        level = grown

    bound = (math.e * G.max_degree) ** (m_size - 1)
    return TreeCount(v, m_size, len(level), bound)


def max_matching(edge_list) -> list:
    """Maximum-cardinality matching (blossom algorithm) as sorted (u, v) pairs"""
    H = nx.Graph()
    for u, v in edge_list:
        if u == v:
            raise ValueError(f"self-loop at vertex {u}")
        H.add_edge(int(u), int(v))
    matching = nx.max_weight_matching(H, maxcardinality=True)
    return sorted((min(u, v), max(u, v)) for u, v in matching)


def matching_percolation_stats(G: Graph, F, delta1: float, trials: int, seed: int) -> MatchingStats:
    """
    Maximum matching size of F_q over independent draws, q = delta1/d

    Trial t keeps edge j of F when its j-th uniform from split_seed(seed, t) is
    below q. delta2 = d * (1st-percentile matching size) / s.
    """
    d = G.degree_uniform
    if d is None:
        raise DomainError("matching statistics need a regular host")
    F = [tuple(e) for e in F]
    s = len(F)
    if s < 1:
        raise DomainError("F must contain at least one edge")
    for u, v in F:
        if not G.has_edge(u, v):
            raise DomainError(f"({u}, {v}) is not an edge of the host")
    if trials < 1:
        raise DomainError(f"trials must be positive, got {trials}")
    q = delta1 / d
    if not 0 <= q <= 1:
        raise DomainError(f"delta1/d must lie in [0, 1], got {q}")

    edges = np.asarray(F, dtype=np.int64)
    sizes = []
    for t in range(trials):
        kept = np.random.default_rng(split_seed(seed, t)).random(s) < q
        sizes.append(len(max_matching(edges[kept].tolist())) if kept.any() else 0)

    values = np.asarray(sizes)
    quantiles = {level: int(np.quantile(values, level, method="lower")) for level in MATCHING_QUANTILES}
    histogram = {}
    for size in sizes:
        histogram[size] = histogram.get(size, 0) + 1
    delta2 = d * quantiles[0.01] / s
    log_main(f"matching_percolation_stats: s={s} q={q:.6g} trials={trials} "
             f"mean={values.mean():.4f} q01={quantiles[0.01]} delta2={delta2:.6g}")
    return MatchingStats(s, q, trials, tuple(sizes), float(values.mean()), quantiles, delta2, histogram)

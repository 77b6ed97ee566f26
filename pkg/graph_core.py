"""
graph_core.py - Graph Representation Module

Immutable simple undirected graphs with regularity metadata, the generators for
every graph family the lab uses (hypercubes, complete graphs, cycles, Cartesian
products, random regular graphs, the tightness construction), basic queries and
the bit-exact text file format:

    n m d          (d = -1 when irregular)
    u v            (m lines, u < v, sorted lexicographically)
"""

import math
import re
import time
from collections import defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from lab_logging import log_main, log_operation_performance
from lab_utils import DEFAULT_SEED, LabError, split_seed

RESTART_LIMIT = 10_000
DEFAULT_VERTEX_CAP = 1 << 22
DEFAULT_LAMBDA_FACTOR = 2.1
# Above this degree a simple pairing appears with probability < exp(-6)
EXACT_PAIRING_MAX_DEGREE = 5

VertexSet = tuple


class GraphError(LabError, ValueError):
    """Invalid graph, vertex or generator parameters"""


class GraphFormatError(GraphError):
    """Malformed graph file"""


class GenerationError(LabError, RuntimeError):
    """A randomized generator ran out of restarts or retries"""


@dataclass(frozen=True)
class Graph:
    """
    Simple undirected graph on vertices 0..n-1

    edges are (u, v) pairs with u < v in lexicographic (canonical) order;
    adjacency[v] is the sorted neighbor tuple of v; degree_uniform is d when
    every vertex has degree d, else None.
    """
    n: int
    edges: tuple
    adjacency: tuple
    degree_uniform: int | None
    family: str = field(default="generic", compare=False)
    params: tuple = field(default=(), compare=False)

    @classmethod
    def from_edges(cls, n: int, edges, family: str = "generic", params: tuple = ()) -> "Graph":
        """Validate an arbitrary edge collection and build the canonical graph"""
        if n < 0:
            raise GraphError(f"vertex count must be non-negative, got {n}")

        canonical = set()
        for u, v in edges:
            u, v = int(u), int(v)
            if u == v:
                raise GraphError(f"self-loop at vertex {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise GraphError(f"edge ({u}, {v}) out of range for n={n}")
            if u > v:
                u, v = v, u
            if (u, v) in canonical:
                raise GraphError(f"parallel edge ({u}, {v})")
            canonical.add((u, v))

        return cls._build(n, sorted(canonical), family, params)

    @classmethod
    def _build(cls, n: int, sorted_edges: list, family: str = "generic", params: tuple = ()) -> "Graph":
        neighbors = [[] for _ in range(n)]
        for u, v in sorted_edges:
            neighbors[u].append(v)
            neighbors[v].append(u)
        # canonical edge order fills every neighbor list in increasing order
        adjacency = tuple(tuple(a) for a in neighbors)
        degrees = {len(a) for a in adjacency}
        degree_uniform = next(iter(degrees)) if len(degrees) == 1 else None
        return cls(n, tuple(sorted_edges), adjacency, degree_uniform, family, tuple(params))

    @property
    def m(self) -> int:
        return len(self.edges)

    @property
    def is_regular(self) -> bool:
        return self.degree_uniform is not None

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.fromiter((len(a) for a in self.adjacency), dtype=np.int64, count=self.n)

    @cached_property
    def min_degree(self) -> int:
        return int(self.degrees.min()) if self.n else 0

    @cached_property
    def max_degree(self) -> int:
        return int(self.degrees.max()) if self.n else 0

    @cached_property
    def connected(self) -> bool:
        if self.n <= 1:
            return True
        count, _ = csgraph.connected_components(self.adjacency_matrix, directed=False)
        return count == 1

    @cached_property
    def edge_array(self) -> np.ndarray:
        if not self.edges:
            return np.zeros((0, 2), dtype=np.int64)
        return np.asarray(self.edges, dtype=np.int64)

    @cached_property
    def edge_index(self) -> dict:
        return {e: i for i, e in enumerate(self.edges)}

    @cached_property
    def neighbor_sets(self) -> tuple:
        return tuple(frozenset(a) for a in self.adjacency)

    @cached_property
    def adjacency_matrix(self) -> sparse.csr_matrix:
        return edges_to_csr(self.n, self.edge_array)

    def has_edge(self, u: int, v: int) -> bool:
        return v in self.neighbor_sets[u]

    def edge_subgraph(self, edge_indices) -> "Graph":
        """Graph on the same vertices keeping the given canonical edge indices"""
        chosen = np.unique(np.asarray(edge_indices, dtype=np.int64))
        return Graph._build(self.n, [self.edges[i] for i in chosen.tolist()])

    def param(self, name: str, default=None):
        return dict(self.params).get(name, default)


def edges_to_csr(n: int, edge_array: np.ndarray) -> sparse.csr_matrix:
    """Symmetric 0/1 adjacency matrix of an (m, 2) edge array"""
    rows = np.concatenate([edge_array[:, 0], edge_array[:, 1]])
    cols = np.concatenate([edge_array[:, 1], edge_array[:, 0]])
    data = np.ones(rows.size, dtype=np.float64)
    return sparse.csr_matrix((data, (rows, cols)), shape=(n, n))


def vertex_set(G: Graph, vertices) -> VertexSet:
    """Validate vertex ids against G and return them as a sorted tuple"""
    ids = sorted(int(v) for v in vertices)
    for v in ids:
        if not 0 <= v < G.n:
            raise GraphError(f"vertex {v} out of range for n={G.n}")
    for a, b in zip(ids, ids[1:]):
        if a == b:
            raise GraphError(f"vertex {a} listed twice")
    return tuple(ids)


def is_connected(G: Graph) -> bool:
    return G.connected


# ---------------- Generators ---------------- #

def hypercube(dim: int) -> Graph:
    """Q^dim: vertices are dim-bit integers, adjacent when they differ in one bit"""
    if dim < 1:
        raise GraphError(f"hypercube dimension must be positive, got {dim}")
    n = 1 << dim
    edges = [(v, v | (1 << b)) for v in range(n) for b in range(dim) if not v & (1 << b)]
    return Graph._build(n, sorted(edges), "hypercube", (("dim", dim),))


def complete_graph(n: int) -> Graph:
    if n < 1:
        raise GraphError(f"complete graph needs n >= 1, got {n}")
    edges = [(u, v) for u in range(n) for v in range(u + 1, n)]
    return Graph._build(n, edges, "complete", (("n", n),))


def cycle_graph(n: int) -> Graph:
    if n < 3:
        raise GraphError(f"cycle needs n >= 3, got {n}")
    edges = sorted([(v, v + 1) for v in range(n - 1)] + [(0, n - 1)])
    return Graph._build(n, edges, "cycle", (("n", n),))


def random_regular(n: int, d: int, seed: int = DEFAULT_SEED) -> Graph:
    """
    Random d-regular simple graph on n vertices from the configuration model

    Small degrees restart the whole pairing on any loop or multi-edge, giving
    the exact uniform distribution over simple graphs. Larger degrees pair
    stubs with the Steger-Wormald procedure (suitable pairs only, restart when
    stuck), which is asymptotically uniform. Both are deterministic per seed.

    Args:
        n: Vertex count
        d: Degree (n*d even, d < n)
        seed: Seed of the numpy PCG64 generator

    Returns:
        Graph with degree_uniform = d
    """
    if n < 1 or d < 1:
        raise GraphError(f"random_regular needs positive n and d, got n={n}, d={d}")
    if (n * d) % 2:
        raise GraphError(f"n * d must be even, got n={n}, d={d}")
    if d >= n:
        raise GraphError(f"degree must be below n, got n={n}, d={d}")

    start = time.time()
    rng = np.random.default_rng(seed)
    attempt_fn = _exact_pairing_attempt if d <= EXACT_PAIRING_MAX_DEGREE else _suitable_pairing_attempt

    for attempt in range(1, RESTART_LIMIT + 1):
        edges = attempt_fn(n, d, rng)
        if edges is not None:
            if attempt > 1:
                log_main(f"random_regular(n={n}, d={d}, seed={seed}) accepted after {attempt} attempts")
            log_operation_performance("random_regular", f"n={n} d={d}", time.time() - start)
            return Graph._build(n, sorted(edges), "random_regular", (("n", n), ("d", d), ("seed", seed)))

    log_operation_performance("random_regular", f"n={n} d={d}", time.time() - start, False)
    raise GenerationError(f"random_regular(n={n}, d={d}) failed after {RESTART_LIMIT} restarts")


def _exact_pairing_attempt(n: int, d: int, rng: np.random.Generator):
    stubs = np.repeat(np.arange(n, dtype=np.int64), d)
    pairs = rng.permutation(stubs).reshape(-1, 2)
    pairs.sort(axis=1)
    if np.any(pairs[:, 0] == pairs[:, 1]):
        return None
    codes = pairs[:, 0] * n + pairs[:, 1]
    if np.unique(codes).size != codes.size:
        return None
    return [tuple(p) for p in pairs.tolist()]


def _suitable_pairing_attempt(n: int, d: int, rng: np.random.Generator):
    edges = set()
    stubs = np.repeat(np.arange(n, dtype=np.int64), d)

    while stubs.size:
        potential = defaultdict(int)
        rng.shuffle(stubs)
        for s1, s2 in stubs.reshape(-1, 2).tolist():
            if s1 > s2:
                s1, s2 = s2, s1
            if s1 != s2 and (s1, s2) not in edges:
                edges.add((s1, s2))
            else:
                potential[s1] += 1
                potential[s2] += 1

        if not _has_suitable_pair(edges, potential):
            return None

        stubs = np.array([node for node, count in sorted(potential.items()) for _ in range(count)],
                         dtype=np.int64)
    return edges


def _has_suitable_pair(edges: set, potential: dict) -> bool:
    if not potential:
        return True
    nodes = sorted(potential)
    for i, s1 in enumerate(nodes):
        for s2 in nodes[i + 1:]:
            if (s1, s2) not in edges:
                return True
    return False


def generate_graph(kind: str, **params) -> Graph:
    """Dispatch to one of the named generators (hypercube, complete, cycle, random_regular)"""
    generators = {
        "hypercube": hypercube,
        "complete": complete_graph,
        "cycle": cycle_graph,
        "random_regular": random_regular,
    }
    if kind not in generators:
        raise GraphError(f"unknown graph kind '{kind}', expected one of {sorted(generators)}")
    return generators[kind](**params)


_FACTOR_TOKEN = re.compile(r"^([KCQ])(\d+)$")


def factor_from_token(token: str) -> Graph:
    """'K3' -> complete_graph(3), 'C4' -> cycle_graph(4), 'Q2' -> hypercube(2)"""
    match = _FACTOR_TOKEN.match(token.strip().upper())
    if not match:
        raise GraphError(f"bad factor '{token}', expected K<n>, C<n> or Q<dim>")
    letter, size = match.group(1), int(match.group(2))
    return {"K": complete_graph, "C": cycle_graph, "Q": hypercube}[letter](size)


def cartesian_product(factors: list, vertex_cap: int = DEFAULT_VERTEX_CAP) -> Graph:
    """
    Cartesian product of the factors

    A vertex tuple (x_1, ..., x_r) is encoded by its mixed-radix index with the
    last factor varying fastest; two tuples are adjacent when they differ in
    exactly one coordinate by an edge of that factor.
    """
    if not factors:
        raise GraphError("cartesian_product needs at least one factor")
    sizes = [f.n for f in factors]
    total = math.prod(sizes)
    if total > vertex_cap:
        raise GraphError(f"product has {total} vertices, above the cap of {vertex_cap}")

    strides = [math.prod(sizes[i + 1:]) for i in range(len(sizes))]
    idx = np.arange(total, dtype=np.int64)
    chunks = [np.zeros((0, 2), dtype=np.int64)]
    for factor, size, stride in zip(factors, sizes, strides):
        coord = (idx // stride) % size
        for a, b in factor.edges:
            src = idx[coord == a]
            chunks.append(np.stack([src, src + (b - a) * stride], axis=1))

    edge_array = np.concatenate(chunks)
    order = np.lexsort((edge_array[:, 1], edge_array[:, 0]))
    edges = [tuple(e) for e in edge_array[order].tolist()]
    return Graph._build(total, edges, "product", (("sizes", tuple(sizes)),))


def hypercube_dimension(G: Graph) -> int | None:
    """dim when G is exactly Q^dim in the canonical bit labelling, else None"""
    if G.n < 2 or G.n & (G.n - 1):
        return None
    dim = G.n.bit_length() - 1
    if G.degree_uniform != dim:
        return None
    diff = G.edge_array[:, 0] ^ G.edge_array[:, 1]
    if np.all(diff & (diff - 1) == 0):
        return dim
    return None


# ---------------- Tightness construction ---------------- #

@dataclass(frozen=True)
class ConstructionSpec:
    """
    Parameters of the d-regular graph whose minimum-degree and connectivity
    thresholds differ: a d1-regular expander H on n/(d+2) hubs, each hub v
    carrying a gadget F(v) = K_{d+1} minus a matching of size (d-d1)/2 whose
    endpoints are joined to v.
    """
    d: int
    n: int
    lambda_ceiling: float | None = None
    max_retries: int = 50
    seed: int = DEFAULT_SEED
    lambda_factor: float = DEFAULT_LAMBDA_FACTOR

    @property
    def d1(self) -> int:
        return 10 * self.d // 19

    @property
    def hubs(self) -> int:
        return self.n // (self.d + 2)

    @property
    def matching_size(self) -> int:
        return (self.d - self.d1) // 2

    @property
    def ceiling(self) -> float:
        if self.lambda_ceiling is not None:
            return self.lambda_ceiling
        return self.lambda_factor * math.sqrt(self.d1)

    def validate(self):
        if self.d <= 0 or self.d % 38:
            raise GraphError(f"d must be a positive multiple of 38, got {self.d}")
        if self.n % (self.d + 2):
            raise GraphError(f"n must be divisible by d+2={self.d + 2}, got {self.n}")
        if self.n < self.d * self.d:
            raise GraphError(f"n must be at least d^2={self.d * self.d}, got {self.n}")
        if self.max_retries < 1:
            raise GraphError(f"max_retries must be positive, got {self.max_retries}")


@dataclass(frozen=True)
class ConstructionLayout:
    """Vertex layout of a tightness construction: hubs first, then gadgets in hub order"""
    d: int
    d1: int
    hubs: int

    @property
    def attachments(self) -> int:
        return self.d - self.d1

    def gadget(self, hub: int) -> range:
        base = self.hubs + hub * (self.d + 1)
        return range(base, base + self.d + 1)

    def hub_edges(self, hub: int) -> list:
        base = self.hubs + hub * (self.d + 1)
        return [(hub, base + a) for a in range(self.attachments)]


def nontrivial_spectral_radius(H: Graph) -> float:
    """max(|lambda_2|, |lambda_min|) of a regular graph's adjacency spectrum"""
    values = np.linalg.eigvalsh(H.adjacency_matrix.toarray())
    return float(max(abs(values[0]), abs(values[-2])))


def tightness_construction(spec: ConstructionSpec) -> Graph:
    """
    Build the d-regular construction on spec.n vertices

    H is redrawn (seed split per attempt) until its nontrivial spectral radius
    is at most spec.ceiling. Matching M(v) is placed on the gadget-local pairs
    {0,1}, {2,3}, ...; the hub is joined to the first d-d1 gadget vertices.
    """
    spec.validate()
    start = time.time()
    d, h, d1 = spec.d, spec.hubs, spec.d1

    for attempt in range(spec.max_retries):
        H = random_regular(h, d1, seed=split_seed(spec.seed, attempt))
        radius = nontrivial_spectral_radius(H)
        if radius <= spec.ceiling:
            break
        log_main(f"tightness_construction: attempt {attempt + 1}/{spec.max_retries} "
                 f"rejected H with lambda={radius:.4f} > {spec.ceiling:.4f}")
    else:
        log_operation_performance("tightness_construction", f"d={d} n={spec.n}", time.time() - start, False)
        raise GenerationError(f"no H with lambda <= {spec.ceiling:.4f} within {spec.max_retries} attempts")

    layout = ConstructionLayout(d, d1, h)
    edges = list(H.edges)
    for v in range(h):
        block = layout.gadget(v)
        for a in range(d + 1):
            for b in range(a + 1, d + 1):
                if a % 2 == 0 and b == a + 1 and b < layout.attachments:
                    continue
                edges.append((block[a], block[b]))
        edges.extend(layout.hub_edges(v))

    G = Graph.from_edges(
        spec.n, edges, "tightness",
        (("d", d), ("d1", d1), ("hubs", h), ("lambda_h", radius), ("seed", spec.seed)),
    )
    log_operation_performance("tightness_construction", f"d={d} n={spec.n}", time.time() - start)
    log_main(f"tightness_construction(d={d}, n={spec.n}): H lambda={radius:.4f}, {G.m} edges")
    return G


def validate_construction(G: Graph) -> ConstructionLayout:
    """
    Recover the construction layout from G or raise GraphError

    Checks d-regularity, the hub/gadget split, that each gadget is K_{d+1}
    minus exactly the (d-d1)/2 pairs {0,1}, {2,3}, ..., that every missing
    pair's endpoints (and only those) are joined to the hub, and that the
    hubs induce a d1-regular graph.
    """
    d = G.degree_uniform
    if not d or d % 38:
        raise GraphError("graph is not d-regular with d a multiple of 38")
    if G.n % (d + 2) or G.n < d * d:
        raise GraphError(f"n={G.n} does not fit the construction layout for d={d}")

    layout = ConstructionLayout(d, 10 * d // 19, G.n // (d + 2))
    r = layout.attachments
    for v in range(layout.hubs):
        block = layout.gadget(v)
        hub_side = [u for u in G.adjacency[v] if u < layout.hubs]
        if len(hub_side) != layout.d1:
            raise GraphError(f"hub {v} has {len(hub_side)} hub neighbors, expected {layout.d1}")
        if G.adjacency[v][layout.d1:] != tuple(block[:r]):
            raise GraphError(f"hub {v} is not attached to the matching endpoints of its gadget")
        for a, x in enumerate(block):
            partner = a ^ 1 if a < r else None
            expected = ((v,) if a < r else ()) + tuple(
                y for b, y in enumerate(block) if b != a and b != partner)
            if G.adjacency[x] != expected:
                raise GraphError(f"gadget vertex {x} of hub {v} has the wrong neighborhood")
    return layout


# ---------------- Queries ---------------- #

def edge_boundary(G: Graph, U) -> int:
    """Number of edges with exactly one endpoint in U"""
    U = vertex_set(G, U)
    mask = np.zeros(G.n, dtype=bool)
    mask[list(U)] = True
    e = G.edge_array
    return int(np.count_nonzero(mask[e[:, 0]] != mask[e[:, 1]]))


def graph_distance(G: Graph, u: int, v: int) -> int | None:
    """BFS hop count between u and v; None when v is unreachable"""
    vertex_set(G, [u])
    vertex_set(G, [v])
    if u == v:
        return 0
    dist = csgraph.shortest_path(G.adjacency_matrix, directed=False, unweighted=True, indices=u)
    return None if np.isinf(dist[v]) else int(dist[v])


# ---------------- File format ---------------- #

def write_graph(G: Graph) -> bytes:
    d = -1 if G.degree_uniform is None else G.degree_uniform
    lines = [f"{G.n} {G.m} {d}"] + [f"{u} {v}" for u, v in G.edges]
    return ("\n".join(lines) + "\n").encode("ascii")


def _parse_int(token: str, where: str) -> int:
    try:
        value = int(token)
    except ValueError:
        raise GraphFormatError(f"{where}: '{token}' is not an integer") from None
    if str(value) != token:
        raise GraphFormatError(f"{where}: '{token}' is not in canonical integer form")
    return value


def read_graph(data) -> Graph:
    """Strict reader of the canonical format; anything write_graph would not emit is rejected"""
    text = data.decode("ascii") if isinstance(data, (bytes, bytearray)) else data
    if not text.endswith("\n"):
        raise GraphFormatError("missing trailing newline")
    lines = text[:-1].split("\n")

    header = lines[0].split(" ")
    if len(header) != 3:
        raise GraphFormatError(f"malformed header '{lines[0]}', expected 'n m d'")
    n, m, d = (_parse_int(tok, "header") for tok in header)
    if n < 0 or m < 0 or d < -1:
        raise GraphFormatError(f"malformed header '{lines[0]}'")
    if len(lines) - 1 != m:
        raise GraphFormatError(f"header declares {m} edges, file has {len(lines) - 1}")

    edges = []
    previous = None
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(" ")
        if len(parts) != 2:
            raise GraphFormatError(f"line {lineno}: expected 'u v', got '{line}'")
        u, v = (_parse_int(tok, f"line {lineno}") for tok in parts)
        if u == v:
            raise GraphFormatError(f"line {lineno}: loop at vertex {u}")
        if u > v:
            raise GraphFormatError(f"line {lineno}: endpoints not ordered ({u} > {v})")
        if u < 0 or v >= n:
            raise GraphFormatError(f"line {lineno}: vertex out of range for n={n}")
        if previous == (u, v):
            raise GraphFormatError(f"line {lineno}: duplicate edge ({u}, {v})")
        if previous is not None and (u, v) < previous:
            raise GraphFormatError(f"line {lineno}: edges not sorted")
        previous = (u, v)
        edges.append((u, v))

    G = Graph._build(n, edges)
    declared = None if d == -1 else d
    if G.degree_uniform != declared:
        raise GraphFormatError(f"header degree {d} does not match the edge list")
    return G


def save_graph(G: Graph, path):
    Path(path).write_bytes(write_graph(G))


def load_graph(path) -> Graph:
    return read_graph(Path(path).read_bytes())

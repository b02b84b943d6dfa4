"""Construction, loading, and validation of diameter-(<=2) undirected graphs.

Graphs are stored in CSR form (indptr/indices) so that large dense
instances stay cheap; per-node neighbor sets are materialized lazily for
membership checks.  Every public constructor either proves the diameter
class structurally or verifies it with the neighbor-bitset test.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property

import numpy as np

_MASK64 = (1 << 64) - 1


class DiameterClass(Enum):
    ONE = "one"
    TWO = "two"
    UNKNOWN_GT_TWO = "unknown_gt_two"


class GraphError(ValueError):
    """Base class for graph construction and validation failures."""


class EdgeListParseError(GraphError):
    """Malformed edge-list text."""


class InvalidEdgeError(GraphError):
    """Self-loop or duplicate edge."""


class DisconnectedError(GraphError):
    """Graph is not connected."""


class DiameterError(GraphError):
    """Graph has diameter greater than two (or an unacceptable class)."""


class GenerationError(RuntimeError):
    """Random generation exhausted its retry budget."""


class GraphFamily(Enum):
    COMPLETE = "complete"
    STAR = "star"
    WHEEL = "wheel"
    COMPLETE_BIPARTITE = "complete_bipartite"
    ER_DIAM2 = "er_diam2"

    @classmethod
    def parse(cls, name: "str | GraphFamily") -> "GraphFamily":
        if isinstance(name, GraphFamily):
            return name
        key = name.strip().lower().replace("-", "_")
        for fam in cls:
            if fam.value == key or fam.name.lower() == key:
                return fam
        raise ValueError(f"unknown graph family: {name!r}")


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable simple connected undirected graph with a known diameter class.

    `indices[indptr[v]:indptr[v+1]]` is the sorted neighbor list of v.
    Instances are safe to share across concurrent trial runners.
    """

    n: int
    indptr: np.ndarray
    indices: np.ndarray
    degrees: np.ndarray
    diameter_class: DiameterClass

    @property
    def m(self) -> int:
        return self.indices.size // 2

    def neighbors(self, v: int) -> np.ndarray:
        """Sorted neighbor indices of v (read-only view)."""
        return self.indices[self.indptr[v] : self.indptr[v + 1]]

    @cached_property
    def neighbor_sets(self) -> list[set]:
        return [set(self.neighbors(v).tolist()) for v in range(self.n)]

    def adjacency(self, v: int) -> set:
        """Neighbor set of v."""
        return self.neighbor_sets[v]

    def degree(self, v: int) -> int:
        return int(self.degrees[v])


def _freeze(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


def _make_graph(indptr: np.ndarray, indices: np.ndarray, diameter_class: DiameterClass) -> Graph:
    degrees = np.diff(indptr).astype(np.int64)
    return Graph(
        n=len(indptr) - 1,
        indptr=_freeze(np.ascontiguousarray(indptr, dtype=np.int64)),
        indices=_freeze(np.ascontiguousarray(indices, dtype=np.int32)),
        degrees=_freeze(degrees),
        diameter_class=diameter_class,
    )


def _connected(indptr: np.ndarray, indices: np.ndarray, n: int) -> bool:
    """BFS reachability from node 0."""
    if n <= 1:
        return True
    seen = np.zeros(n, dtype=bool)
    seen[0] = True
    frontier = np.array([0], dtype=np.int64)
    reached = 1
    while frontier.size:
        parts = [indices[indptr[v] : indptr[v + 1]] for v in frontier.tolist()]
        cand = np.concatenate(parts)
        cand = cand[~seen[cand]]
        frontier = np.unique(cand)
        seen[frontier] = True
        reached += frontier.size
    return reached == n


def from_edges(
    n: int,
    edges,
    diameter_class: DiameterClass | None = None,
) -> Graph:
    """Build and validate a Graph from an iterable of (u, v) pairs.

    Rejects self-loops, duplicate edges, out-of-range endpoints, and
    disconnected inputs.  When `diameter_class` is None it is computed:
    ONE for complete graphs, else TWO / UNKNOWN_GT_TWO by the bitset test.
    """
    if n < 1:
        raise GraphError(f"node count must be positive, got {n}")
    e = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges, dtype=np.int64)
    if e.size == 0:
        e = e.reshape(0, 2)
    if e.ndim != 2 or e.shape[1] != 2:
        raise GraphError("edges must be (u, v) pairs")
    u, v = e[:, 0], e[:, 1]
    if u.size and (e.min() < 0 or e.max() >= n):
        raise GraphError("edge endpoint out of range")
    if np.any(u == v):
        bad = int(u[u == v][0])
        raise InvalidEdgeError(f"self-loop at node {bad}")
    lo, hi = np.minimum(u, v), np.maximum(u, v)
    key = lo.astype(np.int64) * n + hi
    if np.unique(key).size != key.size:
        raise InvalidEdgeError("duplicate edge")

    src = np.concatenate([lo, hi])
    dst = np.concatenate([hi, lo])
    order = np.lexsort((dst, src))
    src, dst = src[order], dst[order]
    counts = np.bincount(src, minlength=n)
    if n >= 2 and counts.min() == 0:
        raise DisconnectedError("graph has an isolated node")
    indptr = np.concatenate([[0], np.cumsum(counts)])
    if not _connected(indptr, dst, n):
        raise DisconnectedError("graph is not connected")

    if diameter_class is None:
        m = key.size
        if m == n * (n - 1) // 2:
            diameter_class = DiameterClass.ONE
        else:
            g = _make_graph(indptr, dst, DiameterClass.UNKNOWN_GT_TWO)
            diameter_class = (
                DiameterClass.TWO if verify_diameter_at_most_two(g) else DiameterClass.UNKNOWN_GT_TWO
            )
    return _make_graph(indptr, dst, diameter_class)


def neighbor_bitsets(g: Graph) -> list[int]:
    """Per-node adjacency bitsets: bit u of entry v set iff u in N(v)."""
    mat = np.zeros((g.n, g.n), dtype=bool)
    for v in range(g.n):
        mat[v, g.neighbors(v)] = True
    packed = np.packbits(mat, axis=1, bitorder="little")
    return [int.from_bytes(packed[v].tobytes(), "little") for v in range(g.n)]


def verify_diameter_at_most_two(g: Graph) -> bool:
    """True iff every non-adjacent pair has a common neighbor.

    Equivalent form used here: for each node v, the union of v's bitset
    with its neighbors' bitsets must cover all other nodes.
    """
    n = g.n
    if n <= 2:
        return True
    bits = neighbor_bitsets(g)
    full = (1 << n) - 1
    for v in range(n):
        cover = bits[v] | (1 << v)
        for w in g.neighbors(v).tolist():
            cover |= bits[w]
        if cover != full:
            return False
    return True


def bfs_distances(g: Graph, src: int) -> np.ndarray:
    """Hop distances from src (-1 for unreachable)."""
    dist = np.full(g.n, -1, dtype=np.int64)
    dist[src] = 0
    frontier = [src]
    d = 0
    while frontier:
        d += 1
        nxt = []
        for v in frontier:
            for w in g.neighbors(v).tolist():
                if dist[w] < 0:
                    dist[w] = d
                    nxt.append(w)
        frontier = nxt
    return dist


def diameter_by_bfs(g: Graph) -> int:
    """Exact diameter via all-pairs BFS. Intended for small n only."""
    best = 0
    for v in range(g.n):
        dist = bfs_distances(g, v)
        if dist.min() < 0:
            raise DisconnectedError("graph is not connected")
        best = max(best, int(dist.max()))
    return best


# --- family constructors -------------------------------------------------

def _complete_csr(n: int):
    idx = np.arange(n, dtype=np.int32)
    rows = [np.delete(idx, v) for v in range(n)]
    indptr = np.arange(0, n * (n - 1) + 1, n - 1, dtype=np.int64)
    return indptr, np.concatenate(rows)


def _star_csr(n: int):
    # node 0 is the center
    indices = np.concatenate([np.arange(1, n, dtype=np.int32), np.zeros(n - 1, dtype=np.int32)])
    indptr = np.concatenate([[0], np.arange(n - 1, 2 * (n - 1) + 1, dtype=np.int64)])
    return indptr, indices


def _wheel_csr(n: int):
    # node 0 is the hub, nodes 1..n-1 form the rim cycle
    rows = [np.arange(1, n, dtype=np.int32)]
    for v in range(1, n):
        prev = n - 1 if v == 1 else v - 1
        nxt = 1 if v == n - 1 else v + 1
        rows.append(np.array(sorted({0, prev, nxt}), dtype=np.int32))
    indices = np.concatenate(rows)
    indptr = np.concatenate([[0], np.cumsum([len(r) for r in rows])]).astype(np.int64)
    return indptr, indices


def _bipartite_csr(a: int, b: int):
    left = np.arange(a, a + b, dtype=np.int32)
    right = np.arange(0, a, dtype=np.int32)
    rows = [left] * a + [right] * b
    indices = np.concatenate(rows)
    indptr = np.concatenate([[0], np.cumsum([len(r) for r in rows])]).astype(np.int64)
    return indptr, indices


def default_er_probability(n: int) -> float:
    """Default edge probability for ER_DIAM2, comfortably above the
    diameter-two threshold so rejection is rare."""
    return min(1.0, 3.0 * math.sqrt(math.log(n) / n))


def _er_edges(n: int, p: float, rng: np.random.Generator):
    us, vs = [], []
    for u in range(n - 1):
        hits = np.flatnonzero(rng.random(n - 1 - u) < p)
        if hits.size:
            us.append(np.full(hits.size, u, dtype=np.int64))
            vs.append(hits.astype(np.int64) + u + 1)
    if not us:
        return np.zeros((0, 2), dtype=np.int64)
    return np.stack([np.concatenate(us), np.concatenate(vs)], axis=1)


def generate(
    family: "str | GraphFamily",
    *,
    n: int | None = None,
    a: int | None = None,
    b: int | None = None,
    p: float | None = None,
    seed: int = 0,
    retry_cap: int = 100,
) -> Graph:
    """Deterministically generate a diameter-(<=2) graph of the given family.

    COMPLETE, STAR, WHEEL take `n` (total node count; star needs n >= 3,
    wheel n >= 4).  COMPLETE_BIPARTITE takes part sizes `a` and `b`.
    ER_DIAM2 takes `n`, an optional edge probability `p`, and rejection-
    samples with fresh sub-seeds until the diameter check passes, up to
    `retry_cap` attempts.
    """
    fam = GraphFamily.parse(family)
    if fam is GraphFamily.COMPLETE_BIPARTITE:
        if a is None or b is None or a < 1 or b < 1 or a + b < 2:
            raise GraphError("complete bipartite needs part sizes a, b >= 1")
        cls = DiameterClass.ONE if (a == 1 and b == 1) else DiameterClass.TWO
        return _make_graph(*_bipartite_csr(a, b), cls)

    if n is None or n < 2:
        raise GraphError(f"{fam.value} needs n >= 2")
    if fam is GraphFamily.COMPLETE:
        return _make_graph(*_complete_csr(n), DiameterClass.ONE)
    if fam is GraphFamily.STAR:
        if n < 3:
            raise GraphError("star needs n >= 3")
        return _make_graph(*_star_csr(n), DiameterClass.TWO)
    if fam is GraphFamily.WHEEL:
        if n < 4:
            raise GraphError("wheel needs n >= 4")
        cls = DiameterClass.ONE if n == 4 else DiameterClass.TWO
        return _make_graph(*_wheel_csr(n), cls)

    # ER_DIAM2
    prob = default_er_probability(n) if p is None else float(p)
    if not 0.0 < prob <= 1.0:
        raise GraphError(f"edge probability must be in (0, 1], got {prob}")
    for attempt in range(retry_cap):
        key = np.array([seed & _MASK64, attempt], dtype=np.uint64)
        rng = np.random.Generator(np.random.Philox(key=key))
        edges = _er_edges(n, prob, rng)
        try:
            g = from_edges(n, edges)
        except (DisconnectedError, InvalidEdgeError):
            continue
        if g.diameter_class in (DiameterClass.ONE, DiameterClass.TWO):
            return g
    raise GenerationError(
        f"no connected diameter-<=2 graph found in {retry_cap} attempts "
        f"(n={n}, p={prob}); p is likely too small"
    )


# --- identifiers ----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class IdAssignment:
    """Distinct unsigned 64-bit identifiers, indexed by node."""

    ids: np.ndarray  # uint64

    def __post_init__(self):
        arr = np.asarray(self.ids, dtype=np.uint64)
        if np.unique(arr).size != arr.size:
            raise ValueError("identifiers must be distinct")
        object.__setattr__(self, "ids", _freeze(arr))

    @classmethod
    def from_values(cls, values) -> "IdAssignment":
        vals = [int(v) for v in values]
        if any(v < 0 or v > _MASK64 for v in vals):
            raise ValueError("identifiers must fit in 64 unsigned bits")
        return cls(ids=np.array(vals, dtype=np.uint64))

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> "IdAssignment":
        vals = rng.integers(0, 1 << 64, n, dtype=np.uint64, endpoint=False)
        # collisions are ~n^2/2^64, but the invariant is hard
        while np.unique(vals).size != vals.size:
            _, first = np.unique(vals, return_index=True)
            dup = np.setdiff1d(np.arange(n), first)
            vals[dup] = rng.integers(0, 1 << 64, dup.size, dtype=np.uint64, endpoint=False)
        return cls(ids=vals)

    def __len__(self) -> int:
        return self.ids.size

    def __getitem__(self, v: int) -> int:
        return int(self.ids[v])

    def argmin_over(self, nodes) -> int:
        """Node holding the minimum identifier among `nodes`."""
        arr = np.fromiter(nodes, dtype=np.int64)
        if arr.size == 0:
            raise ValueError("argmin over empty node set")
        return int(arr[np.argmin(self.ids[arr])])


# --- edge-list text format -------------------------------------------------

def load_edge_list(text: "str | bytes") -> Graph:
    """Parse the 'n m' + 'u v' per line format and validate the graph.

    A diameter greater than two is a distinct error (`DiameterError`)
    because every correctness argument downstream assumes diameter <= 2.
    """
    if isinstance(text, bytes):
        text = text.decode("ascii")
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise EdgeListParseError("empty input")
    head = lines[0].split()
    if len(head) != 2:
        raise EdgeListParseError(f"header must be 'n m', got {lines[0]!r}")
    try:
        n, m = int(head[0]), int(head[1])
    except ValueError as exc:
        raise EdgeListParseError(f"header must be integers: {lines[0]!r}") from exc
    if n < 2:
        raise GraphError(f"n must be >= 2, got {n}")
    if m < 0:
        raise EdgeListParseError(f"m must be >= 0, got {m}")
    if len(lines) - 1 != m:
        raise EdgeListParseError(f"expected {m} edge lines, found {len(lines) - 1}")
    edges = np.zeros((m, 2), dtype=np.int64)
    for k, ln in enumerate(lines[1:]):
        parts = ln.split()
        if len(parts) != 2:
            raise EdgeListParseError(f"edge line {k + 2} must be 'u v', got {ln!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError as exc:
            raise EdgeListParseError(f"edge line {k + 2} must be integers: {ln!r}") from exc
        if u == v:
            raise InvalidEdgeError(f"self-loop at node {u} (line {k + 2})")
        if not 0 <= u < v < n:
            raise EdgeListParseError(f"edge line {k + 2} must satisfy 0 <= u < v < n, got {ln!r}")
        edges[k] = (u, v)
    g = from_edges(n, edges)
    if g.diameter_class is DiameterClass.UNKNOWN_GT_TWO:
        raise DiameterError("graph has diameter greater than two")
    return g

"""Connectivity graphs, orientations and the combinatorial queries on them.

Vertices are diabatic states labelled 0..n-1, edges are nonzero couplings.
An orientation assigns s^{ab} = -s^{ba} = +-1 to every edge.
"""
from __future__ import annotations

import enum
import itertools
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

Edge = tuple[int, int]


class GraphError(ValueError):
    pass


def edge_key(a: int, b: int) -> Edge:
    return (a, b) if a < b else (b, a)


@dataclass(frozen=True)
class ConnectivityGraph:
    n_vertices: int
    edges: tuple[Edge, ...]
    name: str = ""
    adjacency: tuple[tuple[int, ...], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n_vertices < 1:
            raise GraphError("graph needs at least one vertex")
        keys = set()
        for a, b in self.edges:
            if a == b:
                raise GraphError(f"self-loop at {a}")
            if not (0 <= a < self.n_vertices and 0 <= b < self.n_vertices):
                raise GraphError(f"edge {(a, b)} out of range")
            keys.add(edge_key(a, b))
        object.__setattr__(self, "edges", tuple(sorted(keys)))
        adj: list[set[int]] = [set() for _ in range(self.n_vertices)]
        for a, b in self.edges:
            adj[a].add(b)
            adj[b].add(a)
        object.__setattr__(self, "adjacency", tuple(tuple(sorted(s)) for s in adj))

    @classmethod
    def from_edges(cls, edges: Iterable[Iterable[int]], n_vertices: int | None = None,
                   name: str = "") -> "ConnectivityGraph":
        edges = [tuple(int(x) for x in e) for e in edges]
        if n_vertices is None:
            n_vertices = 1 + max(max(e) for e in edges)
        return cls(n_vertices, tuple(edges), name)

    def neighbors(self, v: int) -> tuple[int, ...]:
        return self.adjacency[v]

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    def has_edge(self, a: int, b: int) -> bool:
        return b in self.adjacency[a]

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def is_connected(self) -> bool:
        seen = {0}
        queue = deque([0])
        while queue:
            v = queue.popleft()
            for w in self.adjacency[v]:
                if w not in seen:
                    seen.add(w)
                    queue.append(w)
        return len(seen) == self.n_vertices

    def common_neighbors(self, a: int, b: int) -> tuple[int, ...]:
        return tuple(sorted(set(self.adjacency[a]) & set(self.adjacency[b])))

    def incidence_matrix(self) -> np.ndarray:
        m = np.zeros((self.n_vertices, self.n_edges))
        for k, (a, b) in enumerate(self.edges):
            m[a, k] = 1.0
            m[b, k] = -1.0
        return m


class Orientation:
    """Edge signs s^{ab}; stored once per canonical edge as s^{min,max}."""

    def __init__(self, graph: ConnectivityGraph, signs: Mapping[Edge, int]):
        store: dict[Edge, int] = {}
        for (a, b), s in signs.items():
            if s not in (1, -1):
                raise GraphError(f"sign on {(a, b)} must be +-1, got {s}")
            key = edge_key(a, b)
            val = s if (a, b) == key else -s
            if key in store and store[key] != val:
                raise GraphError(f"conflicting signs on {key}")
            store[key] = val
        missing = [e for e in graph.edges if e not in store]
        extra = [e for e in store if e not in graph.edges]
        if missing or extra:
            raise GraphError(f"orientation mismatch: missing {missing}, extra {extra}")
        self.graph = graph
        self._signs = store

    def sign(self, a: int, b: int) -> int:
        s = self._signs[edge_key(a, b)]
        return s if a < b else -s

    def items(self):
        return self._signs.items()

    def as_tuple(self) -> tuple[int, ...]:
        return tuple(self._signs[e] for e in self.graph.edges)

    def flipped(self) -> "Orientation":
        return Orientation(self.graph, {e: -s for e, s in self._signs.items()})

    def __eq__(self, other):
        return isinstance(other, Orientation) and self._signs == other._signs

    def __hash__(self):
        return hash(tuple(sorted(self._signs.items())))

    def __repr__(self):
        return f"Orientation({self._signs})"


class VertexRole(enum.Enum):
    SOURCE = "source"
    SINK = "sink"
    INTERMEDIATE = "intermediate"


def classify_vertex(graph: ConnectivityGraph, orient: Orientation, v: int) -> VertexRole:
    if graph.degree(v) == 0:
        raise GraphError(f"vertex {v} is isolated")
    signs = {orient.sign(v, b) for b in graph.neighbors(v)}
    if signs == {1}:
        return VertexRole.SINK
    if signs == {-1}:
        return VertexRole.SOURCE
    return VertexRole.INTERMEDIATE


class LoopClass(enum.Enum):
    NON_BIPARTITE = "non-bipartite"
    BIPARTITE = "bipartite"
    INVALID = "invalid"


@dataclass(frozen=True)
class FourLoop:
    vertices: tuple[int, int, int, int]

    @property
    def edges(self) -> tuple[Edge, Edge, Edge, Edge]:
        a, b, c, d = self.vertices
        return (edge_key(a, b), edge_key(b, c), edge_key(c, d), edge_key(d, a))

    def classify(self, orient: Orientation) -> LoopClass:
        return loop_class(orient, self.vertices)


def loop_class(orient: Orientation, quad: tuple[int, int, int, int]) -> LoopClass:
    # signs read around the loop a->b->c->d->a
    a, b, c, d = quad
    s = (orient.sign(a, b), orient.sign(b, c), orient.sign(c, d), orient.sign(d, a))
    return loop_class_from_signs(s)


def loop_class_from_signs(s: tuple[int, int, int, int]) -> LoopClass:
    if sum(s) != 0:
        return LoopClass.INVALID
    if s[0] == s[2]:
        return LoopClass.BIPARTITE
    return LoopClass.NON_BIPARTITE


def canonical_loop(quad: Iterable[int]) -> tuple[int, int, int, int]:
    """Rotate/reflect so the smallest label comes first and the second is the smaller neighbour."""
    q = list(quad)
    i = q.index(min(q))
    q = q[i:] + q[:i]
    if q[3] < q[1]:
        q = [q[0], q[3], q[2], q[1]]
    return tuple(q)


def enumerate_four_loops(graph: ConnectivityGraph) -> list[FourLoop]:
    loops = set()
    for quad in itertools.combinations(range(graph.n_vertices), 4):
        a = quad[0]
        for b, c, d in itertools.permutations(quad[1:]):
            if b > d:
                continue
            if (graph.has_edge(a, b) and graph.has_edge(b, c) and graph.has_edge(c, d)
                    and graph.has_edge(d, a)):
                loops.add(canonical_loop((a, b, c, d)))
    return [FourLoop(q) for q in sorted(loops)]


@dataclass
class ScreenReport:
    triangle_free: bool
    four_loop_cover: bool
    offending: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.triangle_free and self.four_loop_cover


def screen_graph(graph: ConnectivityGraph) -> ScreenReport:
    if not graph.is_connected():
        raise GraphError("disconnected graph")
    offending: list = []
    triangles = []
    for a, b in graph.edges:
        for c in graph.common_neighbors(a, b):
            if c > b:
                triangles.append((a, b, c))
    offending.extend(triangles)
    uncovered = []
    for v in range(graph.n_vertices):
        for x, y in itertools.combinations(graph.neighbors(v), 2):
            # x-v-y extends to a 4-loop iff x,y share a neighbour other than v
            if not [w for w in graph.common_neighbors(x, y) if w != v]:
                uncovered.append((edge_key(x, v), edge_key(v, y)))
    offending.extend(uncovered)
    return ScreenReport(not triangles, not uncovered, offending)


@dataclass(frozen=True)
class Cycle:
    chain: tuple[tuple[Edge, int], ...]

    def as_dict(self) -> dict[Edge, int]:
        return dict(self.chain)

    def has_zero_boundary(self, orient: Orientation) -> bool:
        # n_alpha = s^{ab} when traversed a->b, so the traversal direction is n_alpha*s^{ab}
        boundary: dict[int, int] = {}
        for (a, b), n in self.chain:
            direction = n * orient.sign(a, b)
            boundary[b] = boundary.get(b, 0) + direction
            boundary[a] = boundary.get(a, 0) - direction
        return all(v == 0 for v in boundary.values())


def _cycle_from_walk(walk: list[int], orient: Orientation) -> Cycle:
    chain = []
    for a, b in zip(walk, walk[1:] + walk[:1]):
        chain.append((edge_key(a, b), orient.sign(a, b)))
    return Cycle(tuple(chain))


def cycle_basis(graph: ConnectivityGraph, orient: Orientation) -> list[Cycle]:
    """Fundamental cycles of a BFS spanning tree rooted at vertex 0."""
    if not graph.is_connected():
        raise GraphError("disconnected graph")
    parent = {0: None}
    depth = {0: 0}
    queue = deque([0])
    tree = set()
    while queue:
        v = queue.popleft()
        for w in graph.neighbors(v):
            if w not in parent:
                parent[w] = v
                depth[w] = depth[v] + 1
                tree.add(edge_key(v, w))
                queue.append(w)
    cycles = []
    for a, b in graph.edges:
        if (a, b) in tree:
            continue
        left, right = [a], [b]
        while left[-1] != right[-1]:
            if depth[left[-1]] >= depth[right[-1]]:
                left.append(parent[left[-1]])
            else:
                right.append(parent[right[-1]])
        # walk a -> ... -> lca -> ... -> b, then close with edge b-a
        walk = left + right[-2::-1]
        cycles.append(_cycle_from_walk(walk, orient))
    return cycles


def bfs_tree(graph: ConnectivityGraph, root: int = 0) -> list[tuple[int, int]]:
    """(parent, child) pairs in BFS order."""
    seen = {root}
    order = []
    queue = deque([root])
    while queue:
        v = queue.popleft()
        for w in graph.neighbors(v):
            if w not in seen:
                seen.add(w)
                order.append((v, w))
                queue.append(w)
    return order


def automorphisms(graph: ConnectivityGraph) -> list[tuple[int, ...]]:
    """All vertex permutations preserving the edge set (brute force with degree pruning)."""
    n = graph.n_vertices
    edges = set(graph.edges)
    deg = [graph.degree(v) for v in range(n)]
    result = []

    def extend(perm: list[int], used: set[int]):
        v = len(perm)
        if v == n:
            result.append(tuple(perm))
            return
        for w in range(n):
            if w in used or deg[w] != deg[v]:
                continue
            ok = all((edge_key(perm[u], w) in edges) == (edge_key(u, v) in edges) for u in range(v))
            if ok:
                perm.append(w)
                used.add(w)
                extend(perm, used)
                perm.pop()
                used.discard(w)

    extend([], set())
    return result


# ---------------------------------------------------------------- named graphs

def square() -> ConnectivityGraph:
    # states 1..4 of the usual drawing become 0..3
    return ConnectivityGraph.from_edges([(0, 1), (1, 2), (2, 3), (3, 0)], 4, "square")


def hypercube(dim: int, name: str | None = None) -> ConnectivityGraph:
    n = 1 << dim
    edges = [(v, v ^ (1 << k)) for v in range(n) for k in range(dim) if not v & (1 << k)]
    return ConnectivityGraph.from_edges(edges, n, name or f"hypercube{dim}")


def cube() -> ConnectivityGraph:
    return hypercube(3, "cube")


def hypercube4() -> ConnectivityGraph:
    return hypercube(4, "hypercube4")


def fan(m: int) -> ConnectivityGraph:
    """b-vertices 0 and 1, a-vertices 2..m+1."""
    if m < 1:
        raise GraphError("fan needs m >= 1")
    edges = [(b, 2 + j) for j in range(m) for b in (0, 1)]
    return ConnectivityGraph.from_edges(edges, m + 2, f"fan({m})")


def double_fan() -> ConnectivityGraph:
    # two interlocked fans: b-pair {1,3} over {2,4,6,8}, b-pair {2,4} over {1,3,5,7}
    # (labels shifted by one)
    pairs = [(1, 2), (1, 4), (1, 6), (1, 8), (3, 2), (3, 4), (3, 6), (3, 8),
             (2, 5), (4, 5), (2, 7), (4, 7)]
    return ConnectivityGraph.from_edges([(a - 1, b - 1) for a, b in pairs], 8, "double_fan")


def double_polygon(n: int, name: str | None = None) -> ConnectivityGraph:
    """Polygon with every vertex doubled: i and i+n are twins adjacent to both copies of i+-1."""
    edges = []
    for i in range(n):
        j = (i + 1) % n
        for x in (i, i + n):
            for y in (j, j + n):
                edges.append((x, y))
    return ConnectivityGraph.from_edges(edges, 2 * n, name or f"double_polygon({n})")


def double_pentagon() -> ConnectivityGraph:
    return double_polygon(5, "double_pentagon")


def double_hexagon() -> ConnectivityGraph:
    return double_polygon(6, "double_hexagon")


def square_with_ears() -> ConnectivityGraph:
    # square 0123, ear 4 on the diagonal pair (1,3), ear 5 on (0,2)
    return ConnectivityGraph.from_edges(
        [(0, 1), (1, 2), (2, 3), (3, 0), (1, 4), (3, 4), (0, 5), (2, 5)], 6, "square_with_ears")


def mobius_ladder(rungs: int = 3) -> ConnectivityGraph:
    """Ladder with rails 0..r-1 and r..2r-1, closed with a twist."""
    r = rungs
    edges = [(i, i + r) for i in range(r)]
    edges += [(i, i + 1) for i in range(r - 1)] + [(r + i, r + i + 1) for i in range(r - 1)]
    edges += [(r - 1, r), (2 * r - 1, 0)]
    return ConnectivityGraph.from_edges(edges, 2 * r, "mobius_ladder")


def cube_plus(k: int) -> ConnectivityGraph:
    """Cube with k body diagonals added (0-7, 1-6, 2-5)."""
    if k not in (1, 2, 3):
        raise GraphError("cube_plus_k needs k in 1..3")
    diags = [(0, 7), (1, 6), (2, 5)][:k]
    return ConnectivityGraph.from_edges(list(cube().edges) + diags, 8, f"cube_plus_{k}")


def triangle() -> ConnectivityGraph:
    return ConnectivityGraph.from_edges([(0, 1), (1, 2), (2, 0)], 3, "triangle")


def path_graph(n: int) -> ConnectivityGraph:
    return ConnectivityGraph.from_edges([(i, i + 1) for i in range(n - 1)], n, f"path({n})")


def named_graph(name: str) -> ConnectivityGraph:
    name = name.strip()
    simple = {
        "square": square, "cube": cube, "hypercube4": hypercube4,
        "double_fan": double_fan, "double_pentagon": double_pentagon,
        "double_hexagon": double_hexagon, "square_with_ears": square_with_ears,
        "mobius_ladder": mobius_ladder, "triangle": triangle,
    }
    if name in simple:
        return simple[name]()
    if name.startswith("cube_plus_"):
        return cube_plus(int(name[len("cube_plus_"):]))
    if name.startswith("fan(") and name.endswith(")"):
        args = [int(x) for x in name[4:-1].split(",")]
        return fan(args[0])
    raise GraphError(f"unknown graph name {name!r}")


# ---------------------------------------------------------- named orientations

def square_orientation(graph: ConnectivityGraph | None = None) -> Orientation:
    """Non-bipartite square: s^{12}=s^{14}=+1, s^{32}=s^{34}=-1 (labels 1..4 -> 0..3)."""
    g = graph or square()
    return Orientation(g, {(0, 1): 1, (0, 3): 1, (2, 1): -1, (2, 3): -1})


def bipartite_square_orientation(graph: ConnectivityGraph | None = None) -> Orientation:
    """Vertices 0 and 2 are sinks, 1 and 3 sources."""
    g = graph or square()
    return Orientation(g, {(0, 1): 1, (0, 3): 1, (2, 1): 1, (2, 3): 1})


def hypercube_orientation(graph: ConnectivityGraph) -> Orientation:
    """Arrows point towards lower labels: vertex 0 is the sink, the all-ones vertex the source."""
    return Orientation(graph, {(a, b): 1 for a, b in graph.edges})


def fan_orientation(graph: ConnectivityGraph, m: int, l: int) -> Orientation:
    """Type-II: a_1..a_l sinks, a_{l+1}..a_m sources (s^{a_j b} = +1 for sinks)."""
    signs = {}
    for j in range(m):
        s = 1 if j < l else -1
        for b in (0, 1):
            signs[(2 + j, b)] = s
    return Orientation(graph, signs)


def fan_type1_orientation(graph: ConnectivityGraph, m: int) -> Orientation:
    """Type-I: b_1 source, b_2 sink, all a-vertices intermediate."""
    signs = {}
    for j in range(m):
        signs[(2 + j, 0)] = 1
        signs[(2 + j, 1)] = -1
    return Orientation(graph, signs)

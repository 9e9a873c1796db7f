"""Undirected graphs and chordal-graph algorithms.

Vertices are dense 0-based integers. Variable names live with the data
(:class:`coexnet.data.DataMatrix`), never in the graph itself.

The central routine is maximum cardinality search (MCS). On a chordal graph
the MCS visit order yields, in one pass, the chordality verdict, all maximal
cliques and a perfect sequence of those cliques.
"""
from __future__ import annotations

import heapq
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import NotChordal

__all__ = [
    "UndirectedGraph",
    "PerfectSequence",
    "CliqueGraph",
    "mcs_order",
    "is_chordal",
    "find_cliques",
    "perfect_sequence",
    "clique_graph",
    "connected_components",
    "separates",
]


class UndirectedGraph:
    """Simple undirected graph on vertices ``0 .. vertex_count - 1``.

    Self-loops and parallel edges are rejected. The adjacency sets and the
    edge count are only ever changed together inside :meth:`add_edge`.
    """

    __slots__ = ("_adj", "_m")

    def __init__(self, vertex_count: int, edges: Iterable[tuple[int, int]] = ()):
        if vertex_count < 0:
            raise ValueError("vertex_count must be non-negative")
        self._adj: list[set[int]] = [set() for _ in range(vertex_count)]
        self._m = 0
        for i, j in edges:
            self.add_edge(i, j)

    @classmethod
    def complete(cls, vertex_count: int) -> "UndirectedGraph":
        return cls(vertex_count, ((i, j) for i in range(vertex_count) for j in range(i + 1, vertex_count)))

    @property
    def vertex_count(self) -> int:
        return len(self._adj)

    @property
    def edge_count(self) -> int:
        return self._m

    def _check(self, v: int) -> None:
        if not 0 <= v < len(self._adj):
            raise IndexError(f"vertex {v} out of range for graph on {len(self._adj)} vertices")

    def add_edge(self, i: int, j: int) -> bool:
        """Insert ``{i, j}``; return False if it was already present."""
        self._check(i)
        self._check(j)
        if i == j:
            raise ValueError(f"self-loop on vertex {i}")
        if j in self._adj[i]:
            return False
        self._adj[i].add(j)
        self._adj[j].add(i)
        self._m += 1
        return True

    def has_edge(self, i: int, j: int) -> bool:
        return j in self._adj[i]

    def neighbors(self, v: int) -> frozenset[int]:
        return frozenset(self._adj[v])

    def degree(self, v: int) -> int:
        return len(self._adj[v])

    def edges(self) -> list[tuple[int, int]]:
        """Edges as ``(i, j)`` with ``i < j``, in lexicographic order."""
        return sorted((i, j) for i, nb in enumerate(self._adj) for j in nb if i < j)

    def non_edges(self) -> list[tuple[int, int]]:
        p = len(self._adj)
        return [(i, j) for i in range(p) for j in range(i + 1, p) if j not in self._adj[i]]

    def is_complete(self, vertices: Iterable[int]) -> bool:
        vs = list(vertices)
        return all(vs[b] in self._adj[vs[a]] for a in range(len(vs)) for b in range(a + 1, len(vs)))

    def copy(self) -> "UndirectedGraph":
        g = UndirectedGraph(0)
        g._adj = [set(nb) for nb in self._adj]
        g._m = self._m
        return g

    def relabel(self, perm: Sequence[int]) -> "UndirectedGraph":
        """Graph with vertex ``v`` renamed ``perm[v]``."""
        return UndirectedGraph(len(self._adj), ((perm[i], perm[j]) for i, j in self.edges()))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, UndirectedGraph):
            return NotImplemented
        return self._adj == other._adj

    def __repr__(self) -> str:
        return f"UndirectedGraph(vertex_count={self.vertex_count}, edge_count={self.edge_count})"


@dataclass(frozen=True)
class PerfectSequence:
    """Cliques in perfect order with their separators.

    ``separators[0]`` is always empty. ``parents[j]`` is the index of an
    earlier clique containing ``separators[j]`` (``None`` when the separator is
    empty, i.e. ``cliques[j]`` starts a new connected component).
    """

    cliques: tuple[frozenset[int], ...]
    separators: tuple[frozenset[int], ...]
    parents: tuple[int | None, ...] = field(default=())

    @property
    def multiplicities(self) -> dict[frozenset[int], int]:
        """Multiplicity of every non-empty separator over ``j >= 2``."""
        return dict(Counter(s for s in self.separators[1:] if s))

    @property
    def max_clique_size(self) -> int:
        return max((len(c) for c in self.cliques), default=0)

    def __len__(self) -> int:
        return len(self.cliques)


@dataclass(frozen=True)
class CliqueGraph:
    cliques: tuple[frozenset[int], ...]
    edges: frozenset[tuple[int, int]]


def mcs_order(g: UndirectedGraph, priority: Sequence[int] | None = None) -> tuple[list[int], bool]:
    """Maximum cardinality search.

    Returns the visit order and whether it is a perfect elimination ordering
    when reversed, which holds iff ``g`` is chordal. Ties between unvisited
    vertices of equal weight go to the smallest ``priority`` value, which
    defaults to the vertex index.
    """
    adj = g._adj
    p = len(adj)
    prio = list(range(p)) if priority is None else list(priority)
    weight = [0] * p
    visited = [False] * p
    heap = [(0, prio[v], v) for v in range(p)]
    heapq.heapify(heap)
    order: list[int] = []
    while heap:
        w, _, v = heapq.heappop(heap)
        if visited[v] or -w != weight[v]:
            continue
        visited[v] = True
        order.append(v)
        for u in adj[v]:
            if not visited[u]:
                weight[u] += 1
                heapq.heappush(heap, (-weight[u], prio[u], u))
    return order, _is_perfect_visit_order(adj, order)


def _is_perfect_visit_order(adj: list[set[int]], order: list[int]) -> bool:
    pos = [0] * len(adj)
    for k, v in enumerate(order):
        pos[v] = k
    for v in order:
        earlier = [u for u in adj[v] if pos[u] < pos[v]]
        if len(earlier) < 2:
            continue
        last = max(earlier, key=pos.__getitem__)
        nb_last = adj[last]
        for u in earlier:
            if u != last and u not in nb_last:
                return False
    return True


def is_chordal(g: UndirectedGraph) -> bool:
    return mcs_order(g)[1]


def _mcs_cliques(adj: list[set[int]], order: list[int]) -> list[frozenset[int]]:
    pos = [0] * len(adj)
    for k, v in enumerate(order):
        pos[v] = k
    earlier = [frozenset(u for u in adj[v] if pos[u] < pos[v]) for v in order]
    cliques = []
    for k, v in enumerate(order):
        if k == len(order) - 1 or len(earlier[k + 1]) <= len(earlier[k]):
            cliques.append(earlier[k] | {v})
    return cliques


def _bron_kerbosch(adj: list[set[int]]) -> list[frozenset[int]]:
    out: list[frozenset[int]] = []
    stack = [(set(), set(range(len(adj))), set())]
    while stack:
        r, cand, excl = stack.pop()
        if not cand and not excl:
            out.append(frozenset(r))
            continue
        pivot = max(cand | excl, key=lambda u: len(adj[u] & cand))
        for v in sorted(cand - adj[pivot]):
            stack.append((r | {v}, cand & adj[v], excl & adj[v]))
            cand = cand - {v}
            excl = excl | {v}
    return sorted(out, key=lambda c: sorted(c))


def find_cliques(g: UndirectedGraph) -> list[frozenset[int]]:
    """All maximal complete subgraphs of ``g``.

    Chordal graphs go through MCS (perfect-sequence order); anything else
    falls back to Bron-Kerbosch with pivoting, sorted lexicographically.
    """
    order, chordal = mcs_order(g)
    if chordal:
        return _mcs_cliques(g._adj, order)
    return _bron_kerbosch(g._adj)


def perfect_sequence(g: UndirectedGraph, priority: Sequence[int] | None = None) -> PerfectSequence:
    """Perfect sequence of the cliques of a chordal graph.

    Raises
    ------
    NotChordal
        If ``g`` has a chordless cycle of length four or more.
    """
    order, chordal = mcs_order(g, priority)
    if not chordal:
        raise NotChordal("graph is not chordal; no perfect sequence of cliques exists")
    cliques = _mcs_cliques(g._adj, order)
    seen: set[int] = set()
    separators: list[frozenset[int]] = []
    parents: list[int | None] = []
    containing: dict[int, list[int]] = {}
    for j, c in enumerate(cliques):
        s = frozenset(c & seen)
        separators.append(s)
        parent = None
        if s:
            anchor = min(s, key=lambda u: len(containing[u]))
            parent = next(i for i in containing[anchor] if s <= cliques[i])
        parents.append(parent)
        for u in c:
            containing.setdefault(u, []).append(j)
        seen |= c
    return PerfectSequence(tuple(cliques), tuple(separators), tuple(parents))


def separates(g: UndirectedGraph, a: Iterable[int], b: Iterable[int], s: Iterable[int]) -> bool:
    """True if every path from ``a`` to ``b`` passes through ``s``."""
    adj = g._adj
    s = set(s)
    targets = set(b) - s
    frontier = deque(v for v in set(a) if v not in s)
    seen = set(frontier) | s
    if targets & seen:
        return False
    while frontier:
        v = frontier.popleft()
        for u in adj[v]:
            if u in targets:
                return False
            if u not in seen:
                seen.add(u)
                frontier.append(u)
    return True


def clique_graph(g: UndirectedGraph, ps: PerfectSequence) -> CliqueGraph:
    """Graph on the cliques of ``g``.

    ``{C_i, C_j}`` is an edge iff ``C_i & C_j`` separates ``C_i - C_j`` from
    ``C_j - C_i``. Cliques in different components are always joined.
    Quadratic in the number of cliques; meant for moderate graphs.
    """
    comp = _component_labels(g)
    cl = ps.cliques
    edges = set()
    for i in range(len(cl)):
        ci_comp = comp[next(iter(cl[i]))]
        for j in range(i + 1, len(cl)):
            if comp[next(iter(cl[j]))] != ci_comp:
                edges.add((i, j))
                continue
            s = cl[i] & cl[j]
            if not s:
                continue
            if separates(g, cl[i] - s, cl[j] - s, s):
                edges.add((i, j))
    return CliqueGraph(cl, frozenset(edges))


def _component_labels(g: UndirectedGraph) -> list[int]:
    adj = g._adj
    label = [-1] * len(adj)
    cur = 0
    for root in range(len(adj)):
        if label[root] >= 0:
            continue
        label[root] = cur
        stack = [root]
        while stack:
            v = stack.pop()
            for u in adj[v]:
                if label[u] < 0:
                    label[u] = cur
                    stack.append(u)
        cur += 1
    return label


def connected_components(g: UndirectedGraph) -> list[frozenset[int]]:
    """Vertex sets of the connected components, ordered by smallest vertex."""
    label = _component_labels(g)
    groups: dict[int, set[int]] = {}
    for v, c in enumerate(label):
        groups.setdefault(c, set()).add(v)
    return [frozenset(groups[c]) for c in sorted(groups)]

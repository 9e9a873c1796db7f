"""Stepwise BIC search over decomposable models.

Two stages: a minimum-BIC spanning forest (Kruskal on pairwise scores),
then forward addition of single edges that keep the graph chordal, always
taking the candidate with the lowest BIC change while that change is
negative.

Eligibility during the forward stage uses the local form of the clique-graph
criterion: a non-edge ``{x, y}`` between vertices of one component can be
added iff their common neighbourhood ``S`` separates them, and ``S`` is then
exactly the clique intersection the score conditions on. Pairs in different
components are always eligible with ``S`` empty.
"""
from __future__ import annotations

import heapq
import itertools
import json
import logging
import math
from collections import deque
from dataclasses import asdict, dataclass, field
from typing import Iterator

import numpy as np

from .errors import InvariantViolation, NotChordal, PreconditionError, SingularSubset
from .graph import CliqueGraph, UndirectedGraph, mcs_order
from .stats import MIN_RESIDUAL, DecomposableModel, SsdCache, _cache, _partial, fit_model

logger = logging.getLogger(__name__)

__all__ = [
    "SearchConfig",
    "TraceRecord",
    "SearchTrace",
    "pairwise_improvements",
    "min_bic_forest",
    "eligible_edges",
    "decomposable_search",
    "fit_decomposable",
]


@dataclass(frozen=True)
class SearchConfig:
    """Search limits.

    ``max_clique_size`` defaults to ``n - 1``, the largest clique whose ssd
    block can be non-singular. ``check_chordality`` re-runs MCS after every
    accepted edge (slow; meant for tests).
    """

    max_edges: int | None = None
    max_clique_size: int | None = None
    tie_break: str = "lexicographic"
    emit_trace: bool = False
    check_chordality: bool = False
    block_size: int | None = None

    def clique_cap(self, n: int) -> int:
        if self.max_clique_size is None:
            return n - 1
        if self.max_clique_size >= n:
            raise PreconditionError(
                f"max_clique_size = {self.max_clique_size} must be below the number of observations n = {n}"
            )
        return self.max_clique_size

    def __post_init__(self):
        if self.tie_break != "lexicographic":
            raise ValueError(f"unknown tie_break rule {self.tie_break!r}")


@dataclass(frozen=True)
class TraceRecord:
    stage: str
    step: int
    edge: tuple[int, int]
    improvement: float
    bic: float
    clique: tuple[int, ...]
    forced: bool = False


@dataclass
class SearchTrace:
    start_bic: float
    records: list[TraceRecord] = field(default_factory=list)
    skipped: list[tuple[tuple[int, int], str]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    def check(self) -> None:
        """Raise InvariantViolation unless every step strictly lowered the BIC."""
        prev = self.start_bic
        for r in self.records:
            if not r.improvement < 0 or not r.bic < prev:
                raise InvariantViolation(f"step {r.step} did not decrease the BIC: {r}")
            prev = r.bic

    def extend(self, other: "SearchTrace") -> "SearchTrace":
        return SearchTrace(self.start_bic, self.records + other.records, self.skipped + other.skipped)

    def to_jsonl(self, fh) -> None:
        for r in self.records:
            fh.write(json.dumps(asdict(r), sort_keys=True) + "\n")


def _improvement_from_r2(n: int, r2: np.ndarray) -> np.ndarray:
    resid = np.maximum(1.0 - r2, MIN_RESIDUAL)
    return n * np.log(resid) + math.log(n)


def pairwise_improvements(data, block_size: int | None = None) -> Iterator[tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """Stream all pairs ``i < j`` with negative marginal BIC change.

    Yields ``(improvement, i, j)`` arrays one column block at a time so the
    full ``p x p`` correlation matrix is never held in memory.
    """
    c = _cache(data)
    n, p = c.n, c.p
    z = c.centered / np.sqrt(c.diagonal())
    if block_size is None:
        block_size = max(1, min(p, 20_000_000 // max(p, 1)))
    for start in range(0, p, block_size):
        stop = min(p, start + block_size)
        r = z[:, start:stop].T @ z[:, start:]
        imp = _improvement_from_r2(n, r * r)
        rows, cols = np.nonzero(imp < 0)
        cols_abs = cols + start
        keep = cols_abs > rows + start
        rows, cols_abs = rows[keep] + start, cols_abs[keep]
        yield imp[rows - start, cols_abs - start], rows, cols_abs


class _DisjointSets:
    def __init__(self, size: int):
        self.parent = list(range(size))

    def find(self, v: int) -> int:
        parent = self.parent
        root = v
        while parent[root] != root:
            root = parent[root]
        while parent[v] != root:
            parent[v], v = root, parent[v]
        return root

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if ra > rb:
            ra, rb = rb, ra
        self.parent[rb] = ra
        return True


def _kruskal(p: int, imp: np.ndarray, rows: np.ndarray, cols: np.ndarray, limit: int | None):
    order = np.lexsort((cols, rows, imp))
    dsu = _DisjointSets(p)
    keep = []
    for k in order.tolist():
        if limit is not None and len(keep) >= limit:
            break
        if dsu.union(int(rows[k]), int(cols[k])):
            keep.append(k)
    keep = np.array(keep, dtype=np.int64)
    return imp[keep], rows[keep], cols[keep]


def min_bic_forest(data, cfg: SearchConfig | None = None) -> tuple[DecomposableModel, SearchTrace]:
    """Spanning forest with minimum BIC.

    Every pair is scored with ``n log(1 - r^2) + log n``; negative-score
    edges are accepted in ascending score order (ties by vertex pair) unless
    they close a cycle. Blocks of pairs are folded into the running forest,
    which gives the same forest as one global Kruskal pass because the
    ordering is total.
    """
    cfg = cfg or SearchConfig()
    c = _cache(data)
    p = c.p
    empty = fit_model(c, UndirectedGraph(p))
    trace = SearchTrace(empty.bic)
    if cfg.clique_cap(c.n) < 2 or p < 2:
        return empty, trace
    imp = np.empty(0)
    rows = cols = np.empty(0, dtype=np.int64)
    for b_imp, b_rows, b_cols in pairwise_improvements(c, cfg.block_size):
        imp, rows, cols = _kruskal(
            p,
            np.concatenate([imp, b_imp]),
            np.concatenate([rows, b_rows]),
            np.concatenate([cols, b_cols]),
            cfg.max_edges,
        )
    graph = UndirectedGraph(p)
    current = empty.bic
    for step, k in enumerate(np.lexsort((cols, rows, imp)).tolist(), start=1):
        i, j, value = int(rows[k]), int(cols[k]), float(imp[k])
        graph.add_edge(i, j)
        current += value
        trace.records.append(
            TraceRecord("forest", step, (i, j), value, current, (i, j), value <= c.n * math.log(MIN_RESIDUAL) + math.log(c.n))
        )
    return fit_model(c, graph), trace


def eligible_edges(g: UndirectedGraph, cg: CliqueGraph) -> set[tuple[int, int]]:
    """Non-edges whose addition keeps ``g`` chordal, read off the clique graph."""
    out = set()
    for i, j in cg.edges:
        ci, cj = cg.cliques[i], cg.cliques[j]
        s = ci & cj
        for a in ci - s:
            for b in cj - s:
                if not g.has_edge(a, b):
                    out.add((a, b) if a < b else (b, a))
    return out


def _separated(adj: list[set[int]], x: int, y: int, sep: frozenset[int]) -> bool:
    seen = set(sep)
    seen.add(x)
    frontier = deque([x])
    while frontier:
        v = frontier.popleft()
        for u in adj[v]:
            if u == y:
                return False
            if u not in seen:
                seen.add(u)
                frontier.append(u)
    return True


class _ForwardSearch:
    def __init__(self, cache: SsdCache, start: DecomposableModel, cfg: SearchConfig):
        self.c = cache
        self.cfg = cfg
        self.cap = cfg.clique_cap(cache.n)
        self.graph = start.graph.copy()
        self.adj = self.graph._adj
        self.dsu = _DisjointSets(cache.p)
        for i, j in self.graph.edges():
            self.dsu.union(i, j)
        self.heap: list[tuple[float, int, int, frozenset[int], bool]] = []
        self.trace = SearchTrace(start.bic)
        self.log_n = math.log(cache.n)

    def push(self, x: int, y: int) -> None:
        adj = self.adj
        sep = frozenset(adj[x] & adj[y])
        if not sep and self.dsu.find(x) == self.dsu.find(y):
            return
        if len(sep) + 2 > self.cap:
            self.trace.skipped.append(((x, y), f"clique of size {len(sep) + 2} exceeds cap {self.cap}"))
            logger.debug("skipping %s: clique size %d exceeds cap %d", (x, y), len(sep) + 2, self.cap)
            return
        try:
            log_resid, forced = _partial(self.c, x, y, sep)
        except SingularSubset as exc:
            self.trace.skipped.append(((x, y), str(exc)))
            logger.debug("skipping %s: %s", (x, y), exc)
            return
        value = self.c.n * log_resid + self.log_n
        if value < 0:
            heapq.heappush(self.heap, (value, x, y, sep, forced))

    def seed(self) -> None:
        adj = self.adj
        pairs = set()
        for w in range(len(adj)):
            for x, y in itertools.combinations(sorted(adj[w]), 2):
                if y not in adj[x]:
                    pairs.add((x, y))
        for x, y in sorted(pairs):
            self.push(x, y)
        if self.cap < 2:
            return
        find = self.dsu.find
        for imp, rows, cols in pairwise_improvements(self.c, self.cfg.block_size):
            for value, x, y in zip(imp.tolist(), rows.tolist(), cols.tolist()):
                if find(x) != find(y):
                    heapq.heappush(self.heap, (value, x, y, frozenset(), value <= self.c.n * math.log(MIN_RESIDUAL) + self.log_n))

    def valid(self, x: int, y: int, sep: frozenset[int]) -> bool:
        adj = self.adj
        if y in adj[x] or adj[x] & adj[y] != sep:
            return False
        if not sep:
            return self.dsu.find(x) != self.dsu.find(y)
        return _separated(adj, x, y, sep)

    def run(self) -> SearchTrace:
        self.seed()
        current = self.trace.start_bic
        step = 0
        while self.heap:
            if self.cfg.max_edges is not None and step >= self.cfg.max_edges:
                break
            value, x, y, sep, forced = heapq.heappop(self.heap)
            if not self.valid(x, y, sep):
                continue
            self.graph.add_edge(x, y)
            self.dsu.union(x, y)
            step += 1
            current += value
            self.trace.records.append(
                TraceRecord("decomposable", step, (x, y), value, current, tuple(sorted(sep | {x, y})), forced)
            )
            if self.cfg.check_chordality and not mcs_order(self.graph)[1]:
                raise InvariantViolation(f"graph lost chordality after adding {(x, y)}")
            self.refresh(x, y)
        return self.trace

    def refresh(self, x: int, y: int) -> None:
        adj = self.adj
        pairs = set()
        for v in (x, y):
            for w in adj[v]:
                for u in adj[w]:
                    if u != v and u not in adj[v]:
                        pairs.add((v, u) if v < u else (u, v))
        for a, b in sorted(pairs):
            self.push(a, b)


def decomposable_search(
    data, start: DecomposableModel, cfg: SearchConfig | None = None
) -> tuple[DecomposableModel, SearchTrace]:
    """Forward search from a chordal ``start`` model.

    Only pairs within distance two of a newly added edge are rescored after
    each step; every other candidate keeps its score, and candidates that
    lost eligibility are discarded when they reach the top of the queue.
    """
    cfg = cfg or SearchConfig()
    c = _cache(data)
    if not mcs_order(start.graph)[1]:
        raise NotChordal("start model graph is not chordal")
    search = _ForwardSearch(c, start, cfg)
    trace = search.run()
    model = fit_model(c, search.graph)
    expected = trace.records[-1].bic if trace.records else start.bic
    if any(r.forced for r in trace.records):
        logger.warning("clamped partial correlations were used; skipping the incremental BIC check")
    elif not math.isclose(model.bic, expected, rel_tol=1e-8, abs_tol=1e-6):
        raise InvariantViolation(f"incremental BIC {expected} disagrees with recomputed {model.bic}")
    return model, trace


def fit_decomposable(data, cfg: SearchConfig | None = None) -> tuple[DecomposableModel, SearchTrace]:
    """Forest stage followed by the decomposable forward stage."""
    forest, t1 = min_bic_forest(data, cfg)
    model, t2 = decomposable_search(data, forest, cfg)
    return model, t1.extend(t2)

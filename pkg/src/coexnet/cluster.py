"""Cluster graphs of DE-dense and non-DE-dense regions of a chordal network.

Cliques are classified by their share of differentially expressed (DE)
vertices; cliques of one class that share vertices are merged into clusters;
vertices claimed by a cluster of each class are handed to the cluster whose
class is opposite to their own label. Each DE vertex then receives an
entropy-like uncertainty index from the DE count of its cluster.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import DegenerateNetwork
from .graph import PerfectSequence, UndirectedGraph, perfect_sequence

__all__ = [
    "DEGD",
    "NDEGD",
    "LabeledNetwork",
    "Cluster",
    "ClusterGraph",
    "GeneUncertainty",
    "classify_cliques",
    "build_clusters",
    "uncertainty",
    "cluster_network",
]

DEGD = "DEGD"
NDEGD = "NDEGD"


@dataclass(frozen=True, eq=False)
class LabeledNetwork:
    """Chordal graph with a DE flag per vertex.

    ``alpha`` defaults to the overall DE fraction, kept as an exact fraction
    so the ``>=`` comparison against clique fractions has no rounding.
    """

    graph: UndirectedGraph
    labels: np.ndarray
    alpha: float | Fraction | None = None

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=bool)
        if labels.shape != (self.graph.vertex_count,):
            raise ValueError(f"{labels.size} labels for {self.graph.vertex_count} vertices")
        object.__setattr__(self, "labels", labels)
        alpha = self.alpha
        if alpha is None:
            alpha = Fraction(int(labels.sum()), max(len(labels), 1))
        if not 0 <= alpha <= 1:
            raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
        object.__setattr__(self, "alpha", alpha)

    @property
    def de_count(self) -> int:
        return int(self.labels.sum())


@dataclass(frozen=True)
class Cluster:
    members: frozenset[int]
    cls: str
    eta: int
    rho0: float = float("nan")
    rho: float = float("nan")

    @property
    def size(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class ClusterGraph:
    clusters: tuple[Cluster, ...]
    edges: frozenset[tuple[int, int]]
    p: int

    def cluster_of(self) -> np.ndarray:
        """Cluster index of every vertex."""
        out = np.full(self.p, -1, dtype=np.int64)
        for k, cl in enumerate(self.clusters):
            out[list(cl.members)] = k
        return out


@dataclass(frozen=True)
class GeneUncertainty:
    vertex: int
    cluster: int
    rho0: float
    rho: float


def classify_cliques(net: LabeledNetwork, ps: PerfectSequence) -> list[str]:
    """DEGD when the clique's DE fraction reaches ``alpha``, else NDEGD.

    A network without DE vertices has every clique NDEGD.
    """
    if net.de_count == 0:
        return [NDEGD] * len(ps.cliques)
    labels = net.labels
    out = []
    for clique in ps.cliques:
        frac = Fraction(int(sum(labels[v] for v in clique)), len(clique))
        out.append(DEGD if frac >= net.alpha else NDEGD)
    return out


def _union_components(cliques: Sequence[frozenset[int]]) -> list[frozenset[int]]:
    """Connected components of the union of complete graphs on ``cliques``."""
    parent: dict[int, int] = {}

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for clique in cliques:
        it = iter(sorted(clique))
        first = next(it)
        parent.setdefault(first, first)
        r0 = find(first)
        for v in it:
            parent.setdefault(v, v)
            r = find(v)
            if r != r0:
                lo, hi = min(r, r0), max(r, r0)
                parent[hi] = lo
                r0 = lo
    groups: dict[int, set[int]] = {}
    for v in parent:
        groups.setdefault(find(v), set()).add(v)
    return [frozenset(groups[r]) for r in sorted(groups)]


def build_clusters(net: LabeledNetwork, ps: PerfectSequence, classes: Sequence[str]) -> ClusterGraph:
    """Merge same-class cliques into clusters and resolve shared vertices.

    Raw clusters of one class are the components of the union of that
    class's cliques. A vertex lying in raw clusters of both classes stays
    only in the one whose class is opposite to its label (DE vertices go to
    NDEGD clusters, non-DE vertices to DEGD clusters); among several clusters
    of the target class the lowest raw id wins. Clusters emptied by this are
    dropped, and the rest are numbered by their smallest member.
    """
    raw: list[tuple[frozenset[int], str]] = []
    for cls in (DEGD, NDEGD):
        chosen = [c for c, k in zip(ps.cliques, classes) if k == cls]
        raw.extend((comp, cls) for comp in _union_components(chosen))
    raw.sort(key=lambda t: (min(t[0]), t[1]))

    owners: dict[int, list[int]] = {}
    for rid, (members, _) in enumerate(raw):
        for v in members:
            owners.setdefault(v, []).append(rid)

    labels = net.labels
    final: list[set[int]] = [set() for _ in raw]
    for v, rids in owners.items():
        if len(rids) == 1:
            final[rids[0]].add(v)
            continue
        target = NDEGD if labels[v] else DEGD
        pick = [r for r in rids if raw[r][1] == target] or rids
        final[min(pick)].add(v)

    kept = sorted(
        ((frozenset(m), raw[r][1]) for r, m in enumerate(final) if m),
        key=lambda t: min(t[0]),
    )
    clusters = tuple(Cluster(m, cls, int(sum(labels[v] for v in m))) for m, cls in kept)
    where = {v: k for k, cl in enumerate(clusters) for v in cl.members}
    edges = set()
    for i, j in net.graph.edges():
        a, b = where[i], where[j]
        if a != b:
            edges.add((a, b) if a < b else (b, a))
    return ClusterGraph(clusters, frozenset(edges), net.graph.vertex_count)


def _rho0(eta: int, p: int) -> float:
    if eta == 0:
        return 0.0
    q = eta / p
    return -q * math.log(q)


def uncertainty(cg: ClusterGraph, p: int | None = None, labels=None) -> tuple[ClusterGraph, list[GeneUncertainty]]:
    """Per-cluster ``rho0 = -(eta/p) log(eta/p)`` and ``rho = rho0 / max rho0``.

    Returns the cluster graph with the indices filled in, plus one record
    per DE vertex when ``labels`` is given. When the only DE-carrying
    cluster covers the whole network (``rho0`` is zero everywhere) its
    ``rho`` is set to 1.

    Raises
    ------
    DegenerateNetwork
        If no cluster contains a DE vertex.
    """
    p = cg.p if p is None else p
    if not any(cl.eta > 0 for cl in cg.clusters):
        raise DegenerateNetwork("no cluster contains a differentially expressed vertex; rho is undefined")
    r0 = [_rho0(cl.eta, p) for cl in cg.clusters]
    top = max(r0)
    if top > 0:
        rho = [x / top for x in r0]
    else:
        rho = [1.0 if cl.eta > 0 else 0.0 for cl in cg.clusters]
    clusters = tuple(
        Cluster(cl.members, cl.cls, cl.eta, a, b) for cl, a, b in zip(cg.clusters, r0, rho)
    )
    out = ClusterGraph(clusters, cg.edges, cg.p)
    genes = []
    if labels is not None:
        labels = np.asarray(labels, dtype=bool)
        for k, cl in enumerate(clusters):
            for v in sorted(cl.members):
                if labels[v]:
                    genes.append(GeneUncertainty(v, k, cl.rho0, cl.rho))
        genes.sort(key=lambda g: g.vertex)
    return out, genes


def cluster_network(
    graph: UndirectedGraph, labels, alpha=None, ps: PerfectSequence | None = None
) -> tuple[ClusterGraph, list[GeneUncertainty]]:
    """Classify, cluster and score in one call."""
    net = LabeledNetwork(graph, labels, alpha)
    ps = perfect_sequence(graph) if ps is None else ps
    classes = classify_cliques(net, ps)
    cg = build_clusters(net, ps, classes)
    return uncertainty(cg, graph.vertex_count, net.labels)

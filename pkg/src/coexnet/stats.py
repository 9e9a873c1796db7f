"""Gaussian likelihood machinery for decomposable models.

All quantities are built from centered cross-product (ssd) matrices over
small vertex subsets, so nothing here ever touches a ``p x p`` sample
covariance unless the caller asks for the fitted covariance itself.
"""
from __future__ import annotations

import math
import weakref
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np
from scipy.linalg import solve_triangular

from .data import DataMatrix
from .errors import NotPositiveDefinite, SingularSubset
from .graph import PerfectSequence, UndirectedGraph, perfect_sequence

__all__ = [
    "SsdCache",
    "DecomposableModel",
    "ssd",
    "subset_loglik",
    "model_loglik",
    "bic",
    "parameter_count",
    "partial_correlation",
    "edge_improvement",
    "estimate_covariance",
    "fit_model",
]

LOG_2PI = math.log(2.0 * math.pi)
# 1 - r^2 (or a relative Cholesky pivot) below this is treated as zero.
MIN_RESIDUAL = 1e-12
# Dense ssd matrices are precomputed up to this many variables.
DENSE_LIMIT = 4000


class SsdCache:
    """Column means and centered cross-products of one data matrix.

    For ``p <= DENSE_LIMIT`` the full ssd matrix is computed once and
    subsets are sliced from it; larger problems compute each requested block
    from the centered columns and memoise up to ``maxsize`` blocks.
    """

    def __init__(self, data: DataMatrix, maxsize: int = 65536):
        self.n = data.n
        self.p = data.p
        self.column_means = data.values.mean(axis=0)
        self._centered = data.values - self.column_means
        self._dense = self._centered.T @ self._centered if data.p <= DENSE_LIMIT else None
        self._blocks: dict[tuple[int, ...], np.ndarray] = {}
        self._maxsize = maxsize

    def get(self, subset: Sequence[int]) -> np.ndarray:
        """ssd block with rows and columns in the order given."""
        idx = tuple(int(v) for v in subset)
        if self._dense is not None:
            return self._dense[np.ix_(idx, idx)]
        block = self._blocks.get(idx)
        if block is None:
            cols = self._centered[:, idx]
            block = cols.T @ cols
            if len(self._blocks) >= self._maxsize:
                self._blocks.clear()
            self._blocks[idx] = block
        return block

    def diagonal(self) -> np.ndarray:
        if self._dense is not None:
            return np.diag(self._dense).copy()
        return np.einsum("ij,ij->j", self._centered, self._centered)

    @property
    def centered(self) -> np.ndarray:
        return self._centered


_caches: "weakref.WeakKeyDictionary[DataMatrix, SsdCache]" = weakref.WeakKeyDictionary()


def _cache(data) -> SsdCache:
    if isinstance(data, SsdCache):
        return data
    c = _caches.get(data)
    if c is None:
        c = _caches[data] = SsdCache(data)
    return c


def ssd(data, subset: Iterable[int]) -> np.ndarray:
    """Centered sums of squares and products over ``subset`` (sorted order)."""
    idx = sorted(subset)
    if not idx:
        raise ValueError("subset must be non-empty")
    return _cache(data).get(idx).copy()


def _cholesky(m: np.ndarray, subset) -> np.ndarray:
    try:
        chol = np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        raise SingularSubset(subset) from None
    piv = np.diag(chol) ** 2
    if np.any(piv <= MIN_RESIDUAL * np.diag(m)):
        raise SingularSubset(subset)
    return chol


def subset_loglik(data, subset: Iterable[int]) -> float:
    """Maximised log-likelihood of the saturated Gaussian on ``subset``.

    Uses the MLE ``ssd_A / n``; an empty subset contributes zero.
    """
    c = _cache(data)
    idx = sorted(subset)
    k = len(idx)
    if k == 0:
        return 0.0
    if c.n <= k:
        raise SingularSubset(idx, f"n = {c.n} observations cannot support a saturated block of size {k}")
    chol = _cholesky(c.get(idx) / c.n, idx)
    logdet = 2.0 * float(np.sum(np.log(np.diag(chol))))
    return -0.5 * c.n * (k * LOG_2PI + logdet + k)


def model_loglik(data, ps: PerfectSequence) -> float:
    """Maximised log-likelihood of the decomposable model with cliques ``ps``."""
    total = 0.0
    for clique in ps.cliques:
        total += subset_loglik(data, clique)
    for sep in ps.separators[1:]:
        if sep:
            total -= subset_loglik(data, sep)
    return total


def parameter_count(ps: PerfectSequence) -> int:
    """``2p + |E|``: means, variances and one covariance per edge."""
    p = len(frozenset().union(*ps.cliques)) if ps.cliques else 0
    edges = sum(len(c) * (len(c) - 1) // 2 for c in ps.cliques)
    edges -= sum(len(s) * (len(s) - 1) // 2 for s in ps.separators[1:])
    return 2 * p + edges


def bic(data, ps: PerfectSequence) -> float:
    c = _cache(data)
    return -2.0 * model_loglik(c, ps) + parameter_count(ps) * math.log(c.n)


def _conditional(c: SsdCache, i: int, j: int, sep: Sequence[int]) -> tuple[float, float]:
    """Cholesky tail ``(b, d^2)`` of ssd over ``sep + [i, j]``.

    The conditional ssd of ``(i, j)`` given ``sep`` is ``[[a^2, ab], [ab, b^2 + d^2]]``.
    """
    idx = [*sorted(sep), i, j]
    if c.n <= len(idx):
        raise SingularSubset(idx, f"n = {c.n} observations cannot support a clique of size {len(idx)}")
    m = c.get(idx)
    head = _cholesky(m[:-1, :-1], idx[:-1])
    w = solve_triangular(head, m[:-1, -1], lower=True, check_finite=False)
    return float(w[-1]), float(m[-1, -1] - w @ w)


def _partial(c: SsdCache, i: int, j: int, sep: Sequence[int]) -> tuple[float, bool]:
    """``log(1 - r^2)`` of ``i, j`` given ``sep``, and whether it was clamped."""
    b, d2 = _conditional(c, i, j, sep)
    total = b * b + d2
    if d2 <= MIN_RESIDUAL * total:
        return math.log(MIN_RESIDUAL), True
    return math.log(d2 / total), False


def partial_correlation(data, i: int, j: int, separator: Iterable[int] = ()) -> float:
    """Sample partial correlation of columns ``i`` and ``j`` given ``separator``."""
    b, d2 = _conditional(_cache(data), i, j, separator)
    return b / math.sqrt(b * b + max(d2, 0.0))


def edge_improvement(
    data,
    i: int,
    j: int,
    separator: Iterable[int] = (),
    clique_a: Iterable[int] | None = None,
    clique_b: Iterable[int] | None = None,
) -> float:
    """BIC change from adding ``{i, j}``: ``n log(1 - r^2_{ij.S}) + log n``.

    ``separator`` must be the set separating ``i`` from ``j`` (their common
    neighbours). Negative values mean the edge lowers the BIC. The optional
    cliques are only checked for consistency: ``i`` in ``clique_a``, ``j`` in
    ``clique_b`` and the separator inside both.
    """
    sep = frozenset(separator)
    if clique_a is not None and clique_b is not None:
        a, b = frozenset(clique_a), frozenset(clique_b)
        if i not in a or j not in b or not sep <= (a & b):
            raise ValueError("separator and endpoints are inconsistent with the given cliques")
    c = _cache(data)
    log_resid, _ = _partial(c, i, j, sep)
    return c.n * log_resid + math.log(c.n)


def _inv_spd(m: np.ndarray, subset) -> np.ndarray:
    chol = _cholesky(m, subset)
    inv_chol = np.linalg.solve(chol, np.eye(len(m)))
    return inv_chol.T @ inv_chol


def estimate_precision(data, ps: PerfectSequence) -> np.ndarray:
    """``n * (sum_C [ssd_C^-1]^0 - sum_S nu(S) [ssd_S^-1]^0)``, zero-padded."""
    c = _cache(data)
    if c.n <= ps.max_clique_size:
        raise SingularSubset(max(ps.cliques, key=len), f"n = {c.n} does not exceed the largest clique size {ps.max_clique_size}")
    k = np.zeros((c.p, c.p))
    for clique in ps.cliques:
        idx = sorted(clique)
        k[np.ix_(idx, idx)] += _inv_spd(c.get(idx), idx)
    for sep in ps.separators[1:]:
        if sep:
            idx = sorted(sep)
            k[np.ix_(idx, idx)] -= _inv_spd(c.get(idx), idx)
    return c.n * k


def estimate_covariance(data, ps: PerfectSequence) -> np.ndarray:
    """Maximum likelihood covariance of the decomposable model.

    The precision is assembled from clique and separator blocks and inverted
    one connected component at a time.
    """
    k = estimate_precision(data, ps)
    sigma = np.zeros_like(k)
    for comp in _components(ps):
        idx = np.array(sorted(comp))
        block = k[np.ix_(idx, idx)]
        try:
            chol = np.linalg.cholesky(block)
        except np.linalg.LinAlgError:
            raise NotPositiveDefinite("assembled precision matrix is not positive definite") from None
        inv_chol = np.linalg.solve(chol, np.eye(len(idx)))
        sigma[np.ix_(idx, idx)] = inv_chol.T @ inv_chol
    return (sigma + sigma.T) / 2.0


def _components(ps: PerfectSequence) -> list[set[int]]:
    comps: list[set[int]] = []
    for clique, sep in zip(ps.cliques, ps.separators):
        if not sep:
            comps.append(set())
        comps[-1] |= clique
    return comps


@dataclass(frozen=True, eq=False)
class DecomposableModel:
    """A chordal graph fitted to data.

    ``sigma_hat`` is only filled in by :meth:`with_covariance`; it is a dense
    ``p x p`` matrix and is skipped for large searches.
    """

    graph: UndirectedGraph
    sequence: PerfectSequence
    mean: np.ndarray
    n: int
    loglik: float
    bic: float
    sigma_hat: np.ndarray | None = None

    @property
    def p(self) -> int:
        return self.graph.vertex_count

    @property
    def kappa(self) -> int:
        return 2 * self.p + self.graph.edge_count

    def with_covariance(self, data) -> "DecomposableModel":
        return replace(self, sigma_hat=estimate_covariance(data, self.sequence))


def fit_model(data, graph: UndirectedGraph, covariance: bool = False) -> DecomposableModel:
    """Fit the decomposable model with the given chordal graph."""
    c = _cache(data)
    ps = perfect_sequence(graph)
    ll = model_loglik(c, ps)
    model = DecomposableModel(
        graph=graph.copy(),
        sequence=ps,
        mean=c.column_means.copy(),
        n=c.n,
        loglik=ll,
        bic=-2.0 * ll + (2 * graph.vertex_count + graph.edge_count) * math.log(c.n),
    )
    return model.with_covariance(c) if covariance else model

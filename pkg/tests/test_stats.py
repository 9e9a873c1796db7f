import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coexnet.data import DataMatrix
from coexnet.errors import DegenerateColumnError, SingularSubset
from coexnet.graph import UndirectedGraph, perfect_sequence
from coexnet.stats import (
    SsdCache,
    bic,
    edge_improvement,
    estimate_covariance,
    estimate_precision,
    fit_model,
    model_loglik,
    parameter_count,
    partial_correlation,
    ssd,
    subset_loglik,
)
from oracles import (
    centered_ssd,
    columns_with_correlation,
    direct_bic,
    gaussian_loglik,
    ips,
    partial_corr_regression,
    random_chordal_graph,
)


def random_data(rng, n, p, shift=0.0):
    a = rng.standard_normal((p, p)) * 0.6 + np.eye(p)
    return DataMatrix(rng.standard_normal((n, p)) @ a + shift)


class TestSsd:
    def test_matches_two_pass(self, rng):
        d = random_data(rng, 30, 6)
        np.testing.assert_allclose(ssd(d, range(6)), centered_ssd(d.values), rtol=1e-12, atol=1e-12)
        np.testing.assert_allclose(ssd(d, [4, 1]), centered_ssd(d.values[:, [1, 4]]), rtol=1e-12)

    def test_shift_invariance(self, rng):
        # large offsets must not leak into the cross-products
        x = rng.standard_normal((40, 4))
        a = ssd(DataMatrix(x), range(4))
        b = ssd(DataMatrix(x + 1e6), range(4))
        np.testing.assert_allclose(a, b, rtol=1e-6, atol=1e-6)

    def test_blocked_cache_agrees_with_dense(self, rng, monkeypatch):
        d = random_data(rng, 20, 8)
        dense = SsdCache(d)
        monkeypatch.setattr("coexnet.stats.DENSE_LIMIT", 2)
        blocked = SsdCache(d)
        for sub in ([0, 5, 2], [7], [3, 4, 6, 1]):
            np.testing.assert_allclose(blocked.get(sub), dense.get(sub), rtol=1e-12, atol=1e-12)

    def test_empty_subset_rejected(self, rng):
        with pytest.raises(ValueError):
            ssd(random_data(rng, 5, 2), [])

    def test_constant_column_rejected(self):
        x = np.column_stack([np.arange(5.0), np.full(5, 3.0)])
        with pytest.raises(DegenerateColumnError):
            DataMatrix(x)


class TestLikelihood:
    def test_subset_loglik_matches_density(self, rng):
        d = random_data(rng, 25, 4)
        for sub in ([0], [1, 3], [0, 1, 2, 3]):
            x = d.values[:, sub]
            s = centered_ssd(x) / 25
            assert subset_loglik(d, sub) == pytest.approx(gaussian_loglik(x, s), rel=1e-10)
        assert subset_loglik(d, []) == 0.0

    def test_singular_block(self, rng):
        d = random_data(rng, 3, 5)
        with pytest.raises(SingularSubset):
            subset_loglik(d, [0, 1, 2])
        x = rng.standard_normal((10, 2))
        x = np.column_stack([x, x[:, 0] + x[:, 1]])
        with pytest.raises(SingularSubset):
            subset_loglik(DataMatrix(x), [0, 1, 2])

    def test_model_loglik_and_bic_match_direct(self, rng):
        for _ in range(20):
            p = int(rng.integers(2, 9))
            d = random_data(rng, 40, p)
            g = random_chordal_graph(p, rng)
            ps = perfect_sequence(g)
            sigma = estimate_covariance(d, ps)
            assert model_loglik(d, ps) == pytest.approx(gaussian_loglik(d.values, sigma), rel=1e-9)
            assert bic(d, ps) == pytest.approx(direct_bic(d.values, g, sigma), rel=1e-9)
            assert parameter_count(ps) == 2 * p + g.edge_count

    def test_empty_graph_bic(self, rng):
        d = random_data(rng, 12, 3)
        ps = perfect_sequence(UndirectedGraph(3))
        expect = sum(subset_loglik(d, [j]) for j in range(3))
        assert bic(d, ps) == pytest.approx(-2 * expect + 6 * math.log(12))


class TestEdgeImprovement:
    def test_exact_correlation_half(self, rng):
        x = columns_with_correlation(100, 0.5, rng)
        d = DataMatrix(x)
        expect = 100 * math.log(0.75) + math.log(100)
        assert expect == pytest.approx(-24.1631, abs=1e-4)
        assert edge_improvement(d, 0, 1) == pytest.approx(expect, rel=1e-10)
        assert partial_correlation(d, 0, 1) == pytest.approx(0.5, rel=1e-10)

    def test_equals_bic_difference(self, rng):
        # triangle closing on a path a-s-b
        d = random_data(rng, 30, 3)
        path = UndirectedGraph(3, [(0, 1), (1, 2)])
        tri = UndirectedGraph.complete(3)
        diff = fit_model(d, tri).bic - fit_model(d, path).bic
        assert edge_improvement(d, 0, 2, {1}) == pytest.approx(diff, rel=1e-10)

    def test_partial_correlation_against_regression(self, rng):
        d = random_data(rng, 50, 6)
        for sep in ([], [2], [2, 4, 5]):
            got = partial_correlation(d, 0, 1, sep)
            assert got == pytest.approx(partial_corr_regression(d.values, 0, 1, sep), rel=1e-9)

    def test_clique_consistency_check(self, rng):
        d = random_data(rng, 20, 4)
        edge_improvement(d, 0, 3, {1}, clique_a={0, 1}, clique_b={1, 3})
        with pytest.raises(ValueError):
            edge_improvement(d, 0, 3, {1}, clique_a={0, 2}, clique_b={1, 3})

    def test_perfect_collinearity_is_clamped(self, rng):
        x = rng.standard_normal((20, 1))
        d = DataMatrix(np.column_stack([x, 2 * x + 1]))
        assert edge_improvement(d, 0, 1) == pytest.approx(20 * math.log(1e-12) + math.log(20))


class TestCovariance:
    @pytest.mark.parametrize("seed", range(15))
    def test_contract_and_ips(self, seed):
        rng = np.random.default_rng(seed)
        p = int(rng.integers(2, 16))
        d = random_data(rng, 100, p)
        g = random_chordal_graph(p, rng)
        ps = perfect_sequence(g)
        sigma = estimate_covariance(d, ps)
        s = centered_ssd(d.values) / 100
        for c in ps.cliques:
            idx = np.ix_(sorted(c), sorted(c))
            assert np.max(np.abs(sigma[idx] - s[idx])) < 1e-8
        k = np.linalg.inv(sigma)
        scale = 1 / np.sqrt(np.diag(k))
        kn = k * np.outer(scale, scale)
        for a, b in g.non_edges():
            assert abs(kn[a, b]) < 1e-6
        np.testing.assert_allclose(sigma, ips(s, ps.cliques), atol=1e-6)
        np.testing.assert_allclose(estimate_precision(d, ps), k, rtol=1e-6, atol=1e-8)

    def test_disconnected_blocks_zero(self, rng):
        d = random_data(rng, 30, 4)
        g = UndirectedGraph(4, [(0, 1), (2, 3)])
        sigma = estimate_covariance(d, perfect_sequence(g))
        assert np.all(sigma[np.ix_([0, 1], [2, 3])] == 0)

    def test_too_few_observations(self, rng):
        d = random_data(rng, 3, 3)
        with pytest.raises(SingularSubset):
            estimate_covariance(d, perfect_sequence(UndirectedGraph.complete(3)))

    def test_fit_model_fields(self, rng):
        d = random_data(rng, 30, 3, shift=5.0)
        m = fit_model(d, UndirectedGraph(3, [(0, 1)]), covariance=True)
        assert m.kappa == 7 and m.n == 30 and m.p == 3
        np.testing.assert_allclose(m.mean, d.values.mean(axis=0))
        assert m.sigma_hat.shape == (3, 3)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 7))
def test_bic_permutation_invariance(seed, p):
    rng = np.random.default_rng(seed)
    d = random_data(rng, 25, p)
    g = random_chordal_graph(p, rng)
    perm = rng.permutation(p)
    inv = np.argsort(perm)
    # column k of the permuted data is original column perm[k]
    d2 = DataMatrix(d.values[:, perm])
    g2 = g.relabel(inv.tolist())
    assert fit_model(d2, g2).bic == pytest.approx(fit_model(d, g).bic, rel=1e-10)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.1, 10.0), st.floats(-100, 100))
def test_improvement_affine_invariance(seed, scale, shift):
    rng = np.random.default_rng(seed)
    d = random_data(rng, 30, 3)
    e = DataMatrix(d.values * scale + shift)
    assert edge_improvement(e, 0, 2, {1}) == pytest.approx(edge_improvement(d, 0, 2, {1}), rel=1e-7, abs=1e-7)

"""NPMLE fixed point, joint iteration, and truncation distribution."""

from __future__ import annotations

import numpy as np
import pytest

from dtrunc import (
    DtruncWarning,
    NonConvergenceError,
    fixed_point_residual,
    npmle_joint,
    npmle_selfconsistency,
    shen_K,
)

from conftest import D3_MASS, GOLDEN, uniform_design_sample, uniform_ok_sample


def npmle_bruteforce(s, tol=1e-13, max_iter=200_000):
    """Independent oracle: dense-matrix fixed-point iteration on 1/f_j = sum_i J_ij / F_i.

    Works on the distinct support with multiplicity counts, using explicit
    indicator matrices rather than the package's range-sum kernels.
    """
    t, cnt = np.unique(s.x, return_counts=True)
    J = (s.u[:, None] <= t[None, :]) & (t[None, :] <= s.v[:, None])  # n x m
    f = np.full(t.size, 1.0 / t.size)
    for _ in range(max_iter):
        Fi = J @ f
        f_new = cnt / ((J / Fi[:, None]).sum(axis=0))
        f_new /= f_new.sum()
        if np.max(np.abs(np.cumsum(f_new) - np.cumsum(f))) <= tol:
            f = f_new
            break
        f = f_new
    Fi = J @ f
    w = 1.0 / Fi
    g = (w[:, None] * J).sum(axis=0) / w.sum()
    return t, f, g


class TestClosedFormD3:
    def test_selfconsistency_masses(self, d3):
        fit = npmle_selfconsistency(d3, tol=1e-12)
        np.testing.assert_allclose(fit.f.mass, D3_MASS, atol=1e-10)
        assert fit.converged

    def test_joint_masses_and_g(self, d3):
        fit = npmle_joint(d3, tol=1e-12)
        np.testing.assert_allclose(fit.f.mass, D3_MASS, atol=1e-10)
        np.testing.assert_allclose(fit.g.value, [GOLDEN, 1.0, GOLDEN], atol=1e-10)

    def test_quadratic_cross_check(self):
        # the corner mass solves a^2 - 3a + 1 = 0 on (0, 1)
        a = D3_MASS[0]
        assert a**2 - 3 * a + 1 == pytest.approx(0.0, abs=1e-15)

    def test_matches_bruteforce_oracle(self, d3):
        _, f_oracle, g_oracle = npmle_bruteforce(d3)
        fit = npmle_selfconsistency(d3, tol=1e-12)
        np.testing.assert_allclose(fit.f.mass, f_oracle, atol=1e-10)
        np.testing.assert_allclose(fit.g.value, g_oracle, atol=1e-10)


class TestNoTruncation:
    def test_equals_empirical_cdf(self, all_cover):
        fit = npmle_selfconsistency(all_cover)
        t, cnt = np.unique(all_cover.x, return_counts=True)
        np.testing.assert_allclose(fit.f.mass, cnt / all_cover.n, atol=1e-14)
        np.testing.assert_allclose(fit.g.value, 1.0, atol=1e-14)

    def test_joint_converges_within_two_iterations(self, all_cover):
        fit = npmle_joint(all_cover)
        assert fit.converged
        assert fit.iterations <= 2
        np.testing.assert_allclose(fit.f.mass, np.unique(all_cover.x, return_counts=True)[1] / all_cover.n, atol=1e-14)


class TestIterationProperties:
    @pytest.mark.parametrize("seed", [0, 1, 2, 3])
    def test_oracle_agreement_random_samples(self, seed):
        s = uniform_design_sample(40, seed)
        _, f_oracle, g_oracle = npmle_bruteforce(s)
        fit = npmle_joint(s, tol=1e-12, max_iter=200_000)
        np.testing.assert_allclose(np.cumsum(fit.f.mass), np.cumsum(f_oracle), atol=1e-8)
        np.testing.assert_allclose(fit.g.value, g_oracle, atol=1e-8)

    @pytest.mark.parametrize("seed", [10, 11, 12])
    def test_loglik_monotone(self, seed):
        s = uniform_ok_sample(80, seed)
        for fit_fn in (npmle_selfconsistency, npmle_joint):
            fit = fit_fn(s)
            assert np.all(np.diff(fit.loglik_trace) >= -1e-10)

    @pytest.mark.parametrize("seed", list(range(10)))
    def test_algorithms_agree_within_ten_tol(self, seed):
        tol = 1e-6
        s = uniform_ok_sample(100, seed)
        f1 = npmle_selfconsistency(s, tol=tol)
        f2 = npmle_joint(s, tol=tol)
        assert f1.converged and f2.converged
        dist = np.max(np.abs(np.cumsum(f1.f.mass) - np.cumsum(f2.f.mass)))
        assert dist <= 10 * tol

    @pytest.mark.parametrize("seed", [0, 5])
    def test_fixed_point_residual_small(self, seed):
        tol = 1e-8
        s = uniform_ok_sample(100, seed)
        fit = npmle_joint(s, tol=tol, max_iter=100_000)
        assert fit.converged
        assert fixed_point_residual(s, fit) <= 10 * tol

    def test_masses_normalized(self, d3):
        for fit_fn in (npmle_selfconsistency, npmle_joint):
            fit = fit_fn(d3)
            assert abs(fit.f.mass.sum() - 1.0) <= 1e-12

    def test_proportionality_f_vs_inverse_g(self, seed=4):
        s = uniform_ok_sample(60, seed)
        fit = npmle_joint(s)
        t, cnt = np.unique(s.x, return_counts=True)
        w = cnt / fit.g.value
        np.testing.assert_allclose(fit.f.mass, w / w.sum(), atol=1e-8)

    def test_existence_violation_warns_but_runs(self, dv):
        with pytest.warns(DtruncWarning, match="existence"):
            fit = npmle_joint(dv)
        assert not fit.existence_ok

    def test_non_convergence_flagged(self):
        s = uniform_design_sample(60, 9)
        fit = npmle_joint(s, tol=1e-14, max_iter=3)
        assert not fit.converged
        assert fit.iterations == 3
        assert fit.final_change > 1e-14

    def test_bad_tol_rejected(self, d3):
        with pytest.raises(ValueError):
            npmle_joint(d3, tol=0.0)


class TestShenK:
    def test_d3_masses(self, d3):
        fit = npmle_joint(d3, tol=1e-12)
        K = shen_K(d3, fit)
        np.testing.assert_allclose(K.mass, D3_MASS, atol=1e-8)
        np.testing.assert_array_equal(K.pairs, np.column_stack((d3.u, d3.v)))

    def test_all_covering_uniform(self, all_cover):
        fit = npmle_joint(all_cover)
        K = shen_K(all_cover, fit)
        np.testing.assert_allclose(K.mass, 1.0 / all_cover.n, atol=1e-14)

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_g_identity(self, seed):
        # K(x, inf) - K(x, x-) must reproduce the fitted G at observed values
        s = uniform_ok_sample(80, seed)
        fit = npmle_joint(s)
        K = shen_K(s, fit)
        np.testing.assert_allclose(
            K.sampling_probability(fit.g.at), fit.g.value, atol=1e-10
        )

    def test_refuses_non_converged(self):
        s = uniform_design_sample(60, 9)
        fit = npmle_joint(s, tol=1e-14, max_iter=3)
        with pytest.raises(NonConvergenceError):
            shen_K(s, fit)

    def test_cdf_evaluation(self, d3):
        fit = npmle_joint(d3, tol=1e-12)
        K = shen_K(d3, fit)
        assert K.cdf(np.inf, np.inf) == pytest.approx(1.0, abs=1e-12)
        assert K.cdf(0.4, 2.6) == pytest.approx(K.mass[0], abs=1e-12)

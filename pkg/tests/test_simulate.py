"""Simulation designs and the Monte Carlo experiment runner."""

from __future__ import annotations

from dataclasses import replace

import numpy as np
import pytest
from scipy import stats

from dtrunc import (
    CoxScenario,
    DegeneracyError,
    TruncationDesign,
    gen_truncated,
    load_config,
    preset_table3,
    preset_table4,
    run_experiment,
)


class TestDesign:
    def test_window_width_exact(self):
        design = TruncationDesign(rho=0.5, tau=0.25)
        rng = np.random.default_rng(0)
        u, v = design.sample(10_000, rng)
        np.testing.assert_array_equal(v - u, np.full(u.size, 0.25))

    def test_left_limit_uniform_when_rho_one(self):
        design = TruncationDesign(rho=1.0, tau=0.25)
        rng = np.random.default_rng(1)
        u, _ = design.sample(100_000, rng)
        ks = stats.kstest(u, stats.uniform(loc=-0.25, scale=1.25).cdf)
        assert ks.statistic < 0.02

    def test_supports(self):
        design = TruncationDesign(rho=0.5, tau=0.25)
        rng = np.random.default_rng(2)
        u, v = design.sample(50_000, rng)
        assert u.min() > -0.25 and u.max() < 1.0
        assert v.min() > 0.0 and v.max() < 1.25

    def test_validation(self):
        with pytest.raises(ValueError):
            TruncationDesign(rho=0.0, tau=0.25)


class TestCoxScenario:
    def test_weibull_transform_is_exponential(self):
        scen = CoxScenario(sigma=0.1)
        rng = np.random.default_rng(3)
        x, z = scen.sample(100_000, rng)
        # (x * exp(z))^(1/sigma) recovers the standard exponential draw
        e = (x * np.exp(z)) ** (1.0 / scen.sigma)
        ks = stats.kstest(e, stats.expon.cdf)
        assert ks.statistic < 0.02

    def test_default_coefficient(self):
        assert CoxScenario(sigma=0.1).coef == pytest.approx(10.0)
        assert CoxScenario(sigma=0.1, beta=0.0).coef == 0.0


class TestGenTruncated:
    def test_deterministic(self):
        design = TruncationDesign(rho=0.5, tau=0.25)
        a1, r1, p1 = gen_truncated(100, "uniform01", design, seed=5)
        a2, r2, p2 = gen_truncated(100, "uniform01", design, seed=5)
        np.testing.assert_array_equal(a1.x, a2.x)
        np.testing.assert_array_equal(a1.u, a2.u)
        assert r1 == r2
        np.testing.assert_array_equal(p1.x, p2.x)

    def test_observability_and_rate(self):
        design = TruncationDesign(rho=0.5, tau=0.25)
        s, rate, pre = gen_truncated(400, CoxScenario(sigma=0.1), design, seed=6)
        assert s.n == 400
        assert np.all((s.u <= s.x) & (s.x <= s.v))
        assert 0.0 < rate <= 1.0
        assert pre.x.size >= s.n
        assert pre.z is not None

    def test_wide_windows_accept_everything(self):
        design = TruncationDesign(rho=1.0, tau=50.0)
        s, rate, _ = gen_truncated(200, "uniform01", design, seed=7)
        # tau large enough that acceptance is governed only by u <= x
        assert rate > 0.9

    def test_impossible_design_aborts(self):
        # windows live far below the support of x + 10
        class Shifted:
            def sample(self, n, rng):
                return rng.random(n) + 100.0, None

        with pytest.raises(DegeneracyError, match="acceptance"):
            gen_truncated(5, Shifted(), TruncationDesign(rho=1.0, tau=0.25), seed=8)


class TestConfig:
    def test_presets(self):
        t4 = preset_table4()
        assert t4.study == "cox" and t4.n == 250 and t4.trials == 100
        t3 = preset_table3(n=50)
        assert t3.study == "boot_se" and t3.n == 50 and t3.B == 99

    def test_config_file_roundtrip(self, tmp_path):
        path = tmp_path / "exp.cfg"
        path.write_text(
            "# comment\npreset = table4\nn = 40\ntrials = 3\nseed = 9\n"
            "sigma = 0.2\nrho = 1.0\nestimators = nai, man\n",
            encoding="utf-8",
        )
        cfg = load_config(str(path))
        assert cfg.n == 40 and cfg.trials == 3 and cfg.seed == 9
        assert cfg.scenario.sigma == 0.2 and cfg.design.rho == 1.0
        assert cfg.estimators == ("nai", "man")

    def test_config_rejects_unknown_keys(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("preset = table4\nbananas = 7\n", encoding="utf-8")
        with pytest.raises(Exception, match="bananas"):
            load_config(str(path))

    def test_unknown_estimator_rejected(self):
        with pytest.raises(ValueError, match="unknown"):
            preset_table4(estimators=("man", "cdf"))


class TestRunExperiment:
    def test_cox_study_report_shape(self):
        cfg = preset_table4(n=60, trials=6, seed=3)
        rep = run_experiment(cfg)
        assert {r.name for r in rep.rows} == {"ben", "nai", "man", "ren"}
        assert rep.trials_used + rep.failures == 6
        for r in rep.rows:
            # population-form MSE identity
            assert r.mse == pytest.approx(
                r.bias**2 + r.sd**2 * (r.trials - 1) / r.trials, abs=1e-12
            )

    def test_zero_coefficient_variant_unbiased(self):
        cfg = preset_table4(
            n=100, trials=30, seed=11, scenario=CoxScenario(sigma=0.1, beta=0.0)
        )
        rep = run_experiment(cfg)
        for r in rep.rows:
            assert abs(r.bias) <= 2.0 * r.sd / np.sqrt(r.trials)

    def test_single_trial_flags_insufficient(self):
        cfg = preset_table4(n=50, trials=1, seed=2)
        rep = run_experiment(cfg)
        assert any("SD undefined" in w for w in rep.warnings)
        assert np.isnan(rep.rows[0].sd)

    def test_boot_se_study_small(self):
        cfg = preset_table3(n=60, trials=3, B=19, oracle_trials=25, seed=4)
        rep = run_experiment(cfg)
        assert len(rep.rows) == 3
        assert all(r.name.startswith("boot_se@x") for r in rep.rows)
        assert all(r.truth > 0 for r in rep.rows)
        assert rep.extra["oracle_trials"] == 25

    def test_report_dict_serializable(self):
        import json

        cfg = preset_table4(n=50, trials=3, seed=5)
        rep = run_experiment(cfg)
        payload = json.dumps(rep.to_dict())
        assert "acceptance_rate" in payload

    def test_deterministic(self):
        cfg = preset_table4(n=50, trials=4, seed=6)
        r1 = run_experiment(cfg)
        r2 = run_experiment(cfg)
        assert [r.bias for r in r1.rows] == [r.bias for r in r2.rows]

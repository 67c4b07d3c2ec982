"""Conditional Kendall's tau quasi-independence test."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dtrunc import (
    TruncatedSample,
    UndefinedStatisticError,
    ZeroVarianceError,
    kendall_tau_test,
)
from dtrunc._kernels import kendall_scan

from conftest import make_sample, uniform_design_sample


def scan_bruteforce(s: TruncatedSample):
    ssum, ncomp = 0, 0
    for i in range(s.n):
        for j in range(i + 1, s.n):
            left = max(s.u[i], s.u[j])
            right = min(s.v[i], s.v[j])
            if left <= s.x[i] <= right and left <= s.x[j] <= right:
                ncomp += 1
                ssum += int(np.sign((s.x[i] - s.x[j]) * (s.u[i] - s.u[j])))
    return ssum, ncomp


class TestStatistic:
    def test_one_concordant_pair(self):
        s = make_sample([(1.0, 0.0, 3.0), (2.0, 0.5, 3.5)])
        test = kendall_tau_test(s, B=9, seed=0)
        assert test.tau == 1.0
        assert test.n_comparable == 1

    def test_d3_pairs(self, d3):
        # pairs (1,2) and (2,3) are comparable and concordant; (1,3) is not
        test = kendall_tau_test(d3, B=9, seed=0)
        assert test.tau == 1.0
        assert test.n_comparable == 2

    @pytest.mark.parametrize("seed", [0, 1, 2, 3])
    def test_matches_bruteforce(self, seed):
        s = uniform_design_sample(60, seed)
        ssum, ncomp, _ = kendall_scan(s.x, s.u, s.v)
        bs, bc = scan_bruteforce(s)
        assert (ssum, ncomp) == (bs, bc)

    def test_comparable_bound(self):
        s = uniform_design_sample(40, 5)
        _, ncomp, _ = kendall_scan(s.x, s.u, s.v)
        assert ncomp <= s.n * (s.n - 1) // 2

    @given(st.integers(0, 2**31 - 1), st.floats(0.1, 5.0), st.floats(-3.0, 3.0))
    @settings(max_examples=25, deadline=None)
    def test_invariant_under_increasing_transform(self, seed, scale, shift):
        s = uniform_design_sample(30, seed % 100)
        transformed = TruncatedSample(
            x=scale * s.x + shift, u=scale * s.u + shift, v=scale * s.v + shift
        )
        assert kendall_scan(s.x, s.u, s.v) == kendall_scan(
            transformed.x, transformed.u, transformed.v
        )

    def test_nonlinear_monotone_transform(self):
        s = uniform_design_sample(50, 9)
        t = TruncatedSample(x=np.exp(s.x), u=np.exp(s.u), v=np.exp(s.v))
        assert kendall_scan(s.x, s.u, s.v) == kendall_scan(t.x, t.u, t.v)


class TestErrors:
    def test_no_comparable_pairs(self):
        # windows too narrow to contain the other record's value
        s = make_sample([(1.0, 0.9, 1.1), (5.0, 4.9, 5.1)])
        with pytest.raises(UndefinedStatisticError):
            kendall_tau_test(s, B=9, seed=0)

    def test_all_tied_event_values(self):
        s = make_sample([(1.0, 0.0, 2.0), (1.0, 0.5, 2.5)])
        with pytest.raises(ZeroVarianceError):
            kendall_tau_test(s, B=9, seed=0)


class TestPvalue:
    def test_deterministic(self):
        s = uniform_design_sample(80, 11)
        a = kendall_tau_test(s, B=49, seed=5)
        b = kendall_tau_test(s, B=49, seed=5)
        assert a.pvalue == b.pvalue
        assert 0.0 <= a.pvalue <= 1.0

    def test_small_tau_on_quasi_independent_data(self):
        s = uniform_design_sample(200, 13)
        test = kendall_tau_test(s, B=99, seed=1)
        assert abs(test.tau) < 0.15

"""Numba and numpy kernel paths must agree; backend switching works."""

from __future__ import annotations

import numpy as np
import pytest

from dtrunc import active_backend, npmle_joint, set_backend
from dtrunc._backend import HAVE_NUMBA
from dtrunc._kernels import (
    CONVERGED,
    DEGENERATE,
    kendall_scan,
    npmle_fixed_point,
    range_sum,
    window_probs,
)

from conftest import uniform_design_sample

needs_numba = pytest.mark.skipif(not HAVE_NUMBA, reason="numba not installed")


@pytest.fixture
def on_numpy():
    previous = set_backend("numpy")
    yield
    set_backend(previous)


def _problem(seed, n=120):
    s = uniform_design_sample(n, seed)
    t, cnt = np.unique(s.x, return_counts=True)
    lo = np.searchsorted(t, s.u, side="left").astype(np.int64)
    hi = (np.searchsorted(t, s.v, side="right") - 1).astype(np.int64)
    f0 = np.full(t.size, 1.0 / t.size)
    return cnt.astype(float), lo, hi, f0, s


def test_set_backend_roundtrip():
    original = active_backend()
    previous = set_backend("numpy")
    assert active_backend() == "numpy"
    set_backend(previous)
    assert active_backend() == original


def test_set_backend_rejects_unknown():
    with pytest.raises(ValueError):
        set_backend("fortran")


@needs_numba
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_fixed_point_backends_agree(seed):
    cnt, lo, hi, f0, _ = _problem(seed)
    set_backend("numba")
    f_nb, it_nb, chg_nb, ll_nb, st_nb, _ = npmle_fixed_point(cnt, lo, hi, f0, 1e-8, 50_000)
    set_backend("numpy")
    try:
        f_np, it_np, chg_np, ll_np, st_np, _ = npmle_fixed_point(cnt, lo, hi, f0, 1e-8, 50_000)
    finally:
        set_backend("numba")
    assert st_nb == st_np == CONVERGED
    assert it_nb == it_np
    np.testing.assert_allclose(f_nb, f_np, rtol=0, atol=1e-12)
    np.testing.assert_allclose(ll_nb, ll_np, rtol=0, atol=1e-9)


@needs_numba
@pytest.mark.parametrize("seed", [0, 3])
def test_kendall_backends_identical(seed):
    rng = np.random.default_rng(seed)
    n = 150
    x = np.round(rng.uniform(0, 1, n), 2)
    u = x - rng.uniform(0, 0.5, n)
    v = x + rng.uniform(0, 0.5, n)
    set_backend("numba")
    r_nb = kendall_scan(x, u, v)
    set_backend("numpy")
    try:
        r_np = kendall_scan(x, u, v)
    finally:
        set_backend("numba")
    assert r_nb == r_np


def test_numpy_path_fits(on_numpy):
    s = uniform_design_sample(60, 4)
    fit = npmle_joint(s)
    assert fit.converged
    assert abs(fit.f.mass.sum() - 1.0) <= 1e-12


def test_degenerate_status_reported(on_numpy):
    # a window covering no support point has zero probability mass
    cnt = np.array([1.0])
    lo = np.array([1], dtype=np.int64)
    hi = np.array([0], dtype=np.int64)
    f0 = np.array([1.0])
    *_, status, bad = npmle_fixed_point(cnt, lo, hi, f0, 1e-6, 10)
    assert status == DEGENERATE
    assert bad == 0


def test_range_sum_matches_bruteforce():
    rng = np.random.default_rng(1)
    m, n = 17, 40
    lo = rng.integers(0, m, n).astype(np.int64)
    hi = np.minimum(lo + rng.integers(0, m, n), m - 1).astype(np.int64)
    w = rng.uniform(0.1, 2.0, n)
    expected = np.array([w[(lo <= j) & (j <= hi)].sum() for j in range(m)])
    np.testing.assert_allclose(range_sum(w, lo, hi, m), expected, atol=1e-12)


def test_window_probs_matches_bruteforce():
    rng = np.random.default_rng(2)
    m, n = 11, 30
    f = rng.dirichlet(np.ones(m))
    cumf = np.cumsum(f)
    lo = rng.integers(0, m, n).astype(np.int64)
    hi = np.minimum(lo + rng.integers(0, m, n), m - 1).astype(np.int64)
    expected = np.array([f[lo[i] : hi[i] + 1].sum() for i in range(n)])
    np.testing.assert_allclose(window_probs(cumf, lo, hi), expected, atol=1e-12)

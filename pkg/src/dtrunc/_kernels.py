"""Hot numeric kernels with numba and pure-numpy implementations.

Every public function here dispatches on the active backend (see
``_backend``). The numba variants run the whole iteration loop inside one
compiled function; the numpy variants perform the same arithmetic with
vectorized operations. Both use a fixed summation order per backend, so
results are deterministic; across backends they agree to float roundoff.

Support-grid conventions shared by all kernels: ``t`` is the sorted vector
of distinct event values, ``cnt[j]`` the number of records at ``t[j]``, and
each record ``i`` covers the contiguous index range ``lo[i]..hi[i]`` of
``t`` (closed on both ends, from searchsorted on its window ``[u_i, v_i]``).
"""

from __future__ import annotations

import numpy as np

from ._backend import HAVE_NUMBA, using_numba

# Window probabilities below this are treated as degenerate risk mass.
TINY = 1e-300

# Status codes returned by the fixed-point loop.
CONVERGED = 0
MAX_ITER = 1
DEGENERATE = 2


def _fixed_point_loop(cnt, lo, hi, f0, tol, max_iter, ll_out):
    """Self-consistency iteration f_j <- cnt_j / sum_i I(lo_i<=j<=hi_i)/F_i.

    Returns (f, iterations, final_change, status, bad_record). ``ll_out``
    receives the conditional log-likelihood of each visited iterate.
    """
    m = cnt.size
    n = lo.size
    f = f0.copy()
    cdf_old = np.empty(m)
    c = 0.0
    for j in range(m):
        c += f[j]
        cdf_old[j] = c
    diff = np.empty(m + 1)
    chg = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        cumf = np.empty(m)
        c = 0.0
        ll = 0.0
        for j in range(m):
            c += f[j]
            cumf[j] = c
            ll += cnt[j] * np.log(f[j] / cnt[j])
        for j in range(m + 1):
            diff[j] = 0.0
        for i in range(n):
            left = cumf[lo[i] - 1] if lo[i] > 0 else 0.0
            fi = cumf[hi[i]] - left
            if fi < TINY:
                return f, it, chg, DEGENERATE, i
            ll -= np.log(fi)
            wi = 1.0 / fi
            diff[lo[i]] += wi
            diff[hi[i] + 1] -= wi
        ll_out[it - 1] = ll
        acc = 0.0
        tot = 0.0
        for j in range(m):
            acc += diff[j]
            f[j] = cnt[j] / acc
            tot += f[j]
        chg = 0.0
        c = 0.0
        for j in range(m):
            f[j] /= tot
            c += f[j]
            d = abs(c - cdf_old[j])
            if d > chg:
                chg = d
            cdf_old[j] = c
        if chg <= tol:
            return f, it, chg, CONVERGED, -1
    return f, it, chg, MAX_ITER, -1


def _kendall_loop(x, u, v):
    """Pairwise scan for the conditional Kendall statistic.

    A pair (i, j) is comparable when both event values lie inside the
    intersection [max(u_i,u_j), min(v_i,v_j)] of the two windows. Returns
    (sum of sign((x_i-x_j)(u_i-u_j)), comparable count, x-untied count).
    """
    n = x.size
    ssum = 0
    ncomp = 0
    nuntied = 0
    for i in range(n):
        for j in range(i + 1, n):
            left = max(u[i], u[j])
            right = min(v[i], v[j])
            if left <= x[i] <= right and left <= x[j] <= right:
                ncomp += 1
                if x[i] != x[j]:
                    nuntied += 1
                d = (x[i] - x[j]) * (u[i] - u[j])
                if d > 0.0:
                    ssum += 1
                elif d < 0.0:
                    ssum -= 1
    return ssum, ncomp, nuntied


if HAVE_NUMBA:
    from numba import njit

    _fixed_point_loop_nb = njit(nogil=True, cache=True)(_fixed_point_loop)
    _kendall_loop_nb = njit(nogil=True, cache=True)(_kendall_loop)


def range_sum(w, lo, hi, m):
    """sum_i w_i over records whose index range covers j, for each j < m.

    Difference-array trick: O(n + m), vectorized.
    """
    d = np.bincount(lo, weights=w, minlength=m + 1)
    d -= np.bincount(hi + 1, weights=w, minlength=m + 1)
    return np.cumsum(d)[:m]


def window_probs(cumf, lo, hi):
    """F(v_i) - F(u_i-) for each record, from the cdf over the support."""
    left = np.where(lo > 0, cumf[np.maximum(lo - 1, 0)], 0.0)
    return cumf[hi] - left


def _fixed_point_numpy(cnt, lo, hi, f0, tol, max_iter, ll_out):
    m = cnt.size
    f = f0.copy()
    cdf_old = np.cumsum(f)
    chg = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        cumf = np.cumsum(f)
        fi = window_probs(cumf, lo, hi)
        if np.any(fi < TINY):
            return f, it, chg, DEGENERATE, int(np.argmin(fi))
        ll_out[it - 1] = np.sum(cnt * np.log(f / cnt)) - np.sum(np.log(fi))
        denom = range_sum(1.0 / fi, lo, hi, m)
        f = cnt / denom
        f /= f.sum()
        cdf_new = np.cumsum(f)
        chg = float(np.max(np.abs(cdf_new - cdf_old)))
        cdf_old = cdf_new
        if chg <= tol:
            return f, it, chg, CONVERGED, -1
    return f, it, chg, MAX_ITER, -1


def npmle_fixed_point(cnt, lo, hi, f0, tol, max_iter):
    """Run the NPMLE fixed-point loop on the active backend.

    Returns (f, iterations, final_change, loglik_trace, status, bad_record).
    """
    cnt = np.ascontiguousarray(cnt, dtype=np.float64)
    lo = np.ascontiguousarray(lo, dtype=np.int64)
    hi = np.ascontiguousarray(hi, dtype=np.int64)
    f0 = np.ascontiguousarray(f0, dtype=np.float64)
    ll_out = np.empty(max_iter, dtype=np.float64)
    if using_numba():
        f, it, chg, status, bad = _fixed_point_loop_nb(
            cnt, lo, hi, f0, float(tol), int(max_iter), ll_out
        )
    else:
        f, it, chg, status, bad = _fixed_point_numpy(
            cnt, lo, hi, f0, float(tol), int(max_iter), ll_out
        )
    return f, int(it), float(chg), ll_out[: int(it)].copy(), int(status), int(bad)


def _kendall_numpy(x, u, v, block=1024):
    n = x.size
    ssum = 0
    ncomp = 0
    nuntied = 0
    for start in range(0, n, block):
        stop = min(start + block, n)
        xi = x[start:stop, None]
        ui = u[start:stop, None]
        vi = v[start:stop, None]
        left = np.maximum(ui, u[None, :])
        right = np.minimum(vi, v[None, :])
        comp = (left <= xi) & (xi <= right) & (left <= x[None, :]) & (x[None, :] <= right)
        # keep strictly upper-triangular pairs only
        cols = np.arange(n)[None, :]
        rows = np.arange(start, stop)[:, None]
        comp &= cols > rows
        sgn = np.sign((xi - x[None, :]) * (ui - u[None, :]))
        ssum += int(np.sum(sgn[comp]))
        ncomp += int(np.count_nonzero(comp))
        nuntied += int(np.count_nonzero(comp & (xi != x[None, :])))
    return ssum, ncomp, nuntied


def kendall_scan(x, u, v):
    """Conditional-Kendall pair scan on the active backend.

    Returns (sign_sum, n_comparable, n_comparable_with_untied_x).
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    u = np.ascontiguousarray(u, dtype=np.float64)
    v = np.ascontiguousarray(v, dtype=np.float64)
    if using_numba():
        ssum, ncomp, nuntied = _kendall_loop_nb(x, u, v)
    else:
        ssum, ncomp, nuntied = _kendall_numpy(x, u, v)
    return int(ssum), int(ncomp), int(nuntied)

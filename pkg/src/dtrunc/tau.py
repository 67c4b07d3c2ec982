"""Quasi-independence test based on the conditional Kendall's tau.

A pair (i, j) is comparable when both event values fall inside the
intersection of the two truncation windows; on comparable pairs the sign
of (x_i - x_j)(u_i - u_j) is free of the truncation under
quasi-independence, so its mean estimates a tau that is zero under the
null. The p-value uses a normal approximation with a bootstrap standard
deviation (the asymptotic variance has no closed form here).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ._kernels import kendall_scan
from .errors import UndefinedStatisticError, ZeroVarianceError
from .resampling import bootstrap_statistics
from .sample import TruncatedSample

DEFAULT_B_TAU = 199


@dataclass(frozen=True)
class TauTest:
    """Conditional Kendall's tau with a bootstrap-calibrated p-value."""

    tau: float
    n_comparable: int
    pvalue: float
    B: int
    seed: int | None


def _tau_value(s: TruncatedSample) -> tuple[float, int, int]:
    ssum, ncomp, nuntied = kendall_scan(s.x, s.u, s.v)
    if ncomp == 0:
        raise UndefinedStatisticError("no comparable pairs: tau is undefined")
    return ssum / ncomp, ncomp, nuntied


def kendall_tau_test(
    s: TruncatedSample,
    B: int = DEFAULT_B_TAU,
    seed: int | None = 0,
    *,
    threads: int = 1,
) -> TauTest:
    """Two-sided test of quasi-independence between x and the windows.

    tau is the mean sign of (x_i - x_j)(u_i - u_j) over comparable pairs;
    the p-value is 2 * Phi(-|tau| / sd*) with sd* the standard deviation of
    tau over ``B`` simple-bootstrap resamples. Raises when no pair is
    comparable or when every comparable pair has tied event values.
    """
    tau, ncomp, nuntied = _tau_value(s)
    if nuntied == 0:
        raise ZeroVarianceError(
            "all comparable pairs have tied event values; tau carries no signal"
        )

    def stat(sub: TruncatedSample):
        return _tau_value(sub)[0]

    stats, _ = bootstrap_statistics(s, B, 0 if seed is None else seed, stat, threads=threads)
    sd = float(stats.std(ddof=1))
    if sd == 0.0:
        raise ZeroVarianceError("bootstrap distribution of tau is degenerate")
    z = abs(tau) / sd
    pvalue = math.erfc(z / math.sqrt(2.0))
    return TauTest(tau=float(tau), n_comparable=ncomp, pvalue=pvalue, B=B, seed=seed)

"""One-parameter special exponential family model for the event cdf.

The density is the exponential tilt eta * exp(eta*x) / (exp(eta*b) -
exp(eta*a)) on [a, b] with the support endpoints fixed at the sample
extremes; eta = 0 recovers the uniform density. The tilt parameter is
fitted by maximizing the window-conditional log-likelihood, which is
concave in eta (each record's term is an exponential-family cumulant),
so a golden-section search on a bracket suffices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegeneracyError, NonConvergenceError, NonIdentifiableError
from .sample import TruncatedSample

BRACKET_HALF_WIDTH = 50.0  # in units of eta * (b - a)
BRACKET_EXPANSIONS = 6
GOLDEN_TOL = 1e-10  # in eta * (b - a)
_INVPHI = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class SefFit:
    """Fitted tilt parameter with support endpoints and likelihood value."""

    eta: float
    a: float
    b: float
    loglik: float
    aic: float


def _cdf_scaled(y: np.ndarray, zt: float) -> np.ndarray:
    """F on the unit scale: expm1(zt*y)/expm1(zt) for y in [0,1], zt = eta*(b-a)."""
    if zt == 0.0:
        raise ZeroDivisionError
    if abs(zt) < 1e-6:
        # second-order series of the expm1 ratio; exact to ~1e-19 here
        z = zt * y
        return y * (1.0 + z / 2.0 + z * z / 6.0) / (1.0 + zt / 2.0 + zt * zt / 6.0)
    if zt > 0.0:
        # factored form with non-positive exponents only: no overflow
        return np.exp(zt * (y - 1.0)) * np.expm1(-zt * y) / np.expm1(-zt)
    return np.expm1(zt * y) / np.expm1(zt)


def sef_cdf(fit: SefFit, t) -> np.ndarray:
    """Evaluate the fitted cdf at t; clamped to [a, b] outside the support."""
    t = np.asarray(t, dtype=np.float64)
    d = fit.b - fit.a
    y = np.clip((t - fit.a) / d, 0.0, 1.0)
    if fit.eta == 0.0:
        return y if y.ndim else float(y)
    out = _cdf_scaled(y, fit.eta * d)
    return out if out.ndim else float(out)


def _loglik(eta: float, y: np.ndarray, yu: np.ndarray, yv: np.ndarray) -> float:
    """Conditional log-likelihood on the unit scale (support [0, 1]).

    l(eta) = sum_i [ log(eta / expm1(eta * (yv_i - yu_i))) + eta * (y_i - yu_i) ]
    with the eta -> 0 limit sum_i -log(yv_i - yu_i).
    """
    width = yv - yu
    if eta == 0.0:
        return float(-np.sum(np.log(width)))
    with np.errstate(over="ignore", divide="ignore"):
        # overflow in expm1 collapses the term to log(0) = -inf, which the
        # bracketed maximizer treats as an ordinary very bad value
        return float(np.sum(np.log(eta / np.expm1(eta * width)) + eta * (y - yu)))


def _golden_max(fn, lo: float, hi: float, tol: float) -> float:
    """Golden-section maximizer of a unimodal fn on [lo, hi]."""
    a, b = lo, hi
    x1 = b - _INVPHI * (b - a)
    x2 = a + _INVPHI * (b - a)
    f1, f2 = fn(x1), fn(x2)
    while b - a > tol:
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + _INVPHI * (b - a)
            f2 = fn(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - _INVPHI * (b - a)
            f1 = fn(x1)
    return 0.5 * (a + b)


def sef_fit(s: TruncatedSample) -> SefFit:
    """Maximum likelihood fit of the tilt parameter.

    Support endpoints are the sample extremes; AIC = 2 - 2*loglik. Raises
    :class:`NonIdentifiableError` when the likelihood is flat and
    :class:`NonConvergenceError` when the maximizer keeps escaping the
    (repeatedly expanded) search bracket.
    """
    a = float(s.x.min())
    b = float(s.x.max())
    if not a < b:
        raise ValueError("need min(x) < max(x) to fit a support interval")
    d = b - a
    y = (s.x - a) / d
    yu = np.clip((s.u - a) / d, 0.0, 1.0)
    yv = np.clip((s.v - a) / d, 0.0, 1.0)
    if np.any(yv - yu <= 0.0):
        bad = int(np.flatnonzero(yv - yu <= 0.0)[0])
        raise DegeneracyError(
            f"record {bad}: truncation window meets the support in a single point"
        )

    def objective(zeta: float) -> float:
        # zeta = eta * (b - a); likelihood evaluated on the unit scale
        return _loglik(zeta, y, yu, yv)

    probe = [objective(zv) for zv in np.linspace(-BRACKET_HALF_WIDTH, BRACKET_HALF_WIDTH, 9)]
    if max(probe) - min(probe) <= 1e-12 * (1.0 + abs(max(probe))):
        raise NonIdentifiableError("flat likelihood: the windows carry no tilt information")

    half = BRACKET_HALF_WIDTH
    for _ in range(BRACKET_EXPANSIONS + 1):
        zhat = _golden_max(objective, -half, half, GOLDEN_TOL)
        edge = half - max(10.0 * GOLDEN_TOL, 1e-6 * half)
        if abs(zhat) < edge:
            break
        half *= 2.0
    else:
        raise NonConvergenceError(
            f"tilt maximizer escaped the search bracket even at |eta|*(b-a) <= {half / 2.0}"
        )
    # snap to the uniform model when the optimum is numerically at zero
    if abs(zhat) < GOLDEN_TOL:
        zhat = 0.0
    loglik = objective(zhat) - s.n * np.log(d)  # back to the original scale
    return SefFit(eta=zhat / d, a=a, b=b, loglik=float(loglik), aic=float(2.0 - 2.0 * loglik))

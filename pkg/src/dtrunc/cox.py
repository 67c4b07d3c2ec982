"""Cox regression under double truncation via inverse-probability weighting.

Three weighting schemes share one risk-set machinery:

* ``mandel``  - every risk term e^{beta z_j} is scaled by G(x_j)^-1 (the
  offset construction); the outer sum over subjects is unweighted.
* ``rennert`` - additionally weights the i-th score term by G(x_i)^-1,
  i.e. the score of the case-weighted partial likelihood.
* ``naive``   - ignores truncation entirely (G = 1).

Risk sets use the closed inequality x_j >= x_i; exact ties join the same
risk set (Breslow-style aggregation).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DtruncWarning, NonConvergenceError, NonIdentifiableError
from .npmle import SamplingProbability, npmle_joint
from .resampling import bootstrap_statistics
from .sample import TruncatedSample, existence_check

SCHEMES = ("mandel", "rennert", "naive")
NEWTON_TOL = 1e-8
NEWTON_MAX_ITER = 50
DEFAULT_B_COX = 199


@dataclass(frozen=True)
class CoxFit:
    """Estimated regression coefficients with bootstrap inference."""

    beta: np.ndarray
    se: np.ndarray
    pvalue: np.ndarray
    scheme: str
    iterations: int
    converged: bool
    names: tuple[str, ...]
    B: int
    failures: int
    seed: int | None
    replicates: np.ndarray | None = None


def _check_scheme(scheme: str) -> None:
    if scheme not in SCHEMES:
        raise ValueError(f"scheme must be one of {SCHEMES}, got {scheme!r}")


def _g_at_records(s: TruncatedSample, g: SamplingProbability | None, scheme: str) -> np.ndarray:
    if scheme == "naive" or g is None:
        return np.ones(s.n)
    gi = g.value_at(s.x)
    if np.any(gi <= 0.0):
        raise NonIdentifiableError("sampling probability must be positive at every x_i")
    return gi


def _risk_stats(beta: np.ndarray, x: np.ndarray, z: np.ndarray, gi: np.ndarray):
    """Per-subject risk-set mean and covariance of z, weighted by e^{bz}/G."""
    n, p = z.shape
    w = np.exp(z @ beta) / gi
    order = np.argsort(-x, kind="stable")
    xs = x[order]
    zs = z[order]
    ws = w[order]
    s0 = np.cumsum(ws)
    s1 = np.cumsum(ws[:, None] * zs, axis=0)
    s2 = np.cumsum(ws[:, None, None] * (zs[:, :, None] * zs[:, None, :]), axis=0)
    # ties enter the risk set together: use the last index of each tied block
    ends = np.searchsorted(-xs, -xs, side="right") - 1
    s0e = s0[ends]
    mean = s1[ends] / s0e[:, None]
    cov = s2[ends] / s0e[:, None, None] - mean[:, :, None] * mean[:, None, :]
    return order, zs, mean, cov


def cox_score(
    beta: np.ndarray,
    s: TruncatedSample,
    g: SamplingProbability | None,
    scheme: str = "mandel",
) -> np.ndarray:
    """Estimating-equation value U(beta) for the requested scheme."""
    _check_scheme(scheme)
    if s.z is None:
        raise ValueError("sample carries no covariates")
    beta = np.atleast_1d(np.asarray(beta, dtype=np.float64))
    gi = _g_at_records(s, g, scheme)
    order, zs, mean, _ = _risk_stats(beta, s.x, s.z, gi)
    outer = 1.0 / gi[order] if scheme == "rennert" else np.ones(s.n)
    return np.sum(outer[:, None] * (zs - mean), axis=0)


def _score_and_jacobian(beta, x, z, gi, scheme):
    order, zs, mean, cov = _risk_stats(beta, x, z, gi)
    outer = 1.0 / gi[order] if scheme == "rennert" else np.ones(x.size)
    score = np.sum(outer[:, None] * (zs - mean), axis=0)
    jac = -np.sum(outer[:, None, None] * cov, axis=0)
    return score, jac


def _newton(x, z, gi, scheme, tol=NEWTON_TOL, max_iter=NEWTON_MAX_ITER):
    """Damped Newton on U(beta) = 0 from beta = 0; returns (beta, iters)."""
    if np.any(np.ptp(z, axis=0) == 0.0):
        const = int(np.flatnonzero(np.ptp(z, axis=0) == 0.0)[0])
        raise NonIdentifiableError(
            f"covariate column {const} is constant; the partial likelihood is flat"
        )
    p = z.shape[1]
    beta = np.zeros(p)
    score, jac = _score_and_jacobian(beta, x, z, gi, scheme)
    for it in range(1, max_iter + 1):
        if np.max(np.abs(score)) <= tol:
            return beta, it - 1
        try:
            step = np.linalg.solve(jac, -score)
        except np.linalg.LinAlgError as exc:
            raise NonIdentifiableError("singular information matrix") from exc
        norm0 = float(np.linalg.norm(score))
        lam = 1.0
        for _ in range(20):
            cand = beta + lam * step
            cand_score, cand_jac = _score_and_jacobian(cand, x, z, gi, scheme)
            if float(np.linalg.norm(cand_score)) < norm0:
                break
            lam *= 0.5
        beta, score, jac = cand, cand_score, cand_jac
    if np.max(np.abs(score)) <= tol:
        return beta, max_iter
    raise NonConvergenceError(
        f"Newton did not converge in {max_iter} iterations; "
        f"|U|_inf = {np.max(np.abs(score)):.3e} at beta = {beta.tolist()} "
        "(monotone likelihood or separation is the usual cause)"
    )


def cox_fit(
    s: TruncatedSample,
    scheme: str = "mandel",
    B: int = DEFAULT_B_COX,
    seed: int | None = 0,
    *,
    tol: float = 1e-6,
    max_iter: int = 10_000,
    threads: int = 1,
) -> CoxFit:
    """Fit the weighted Cox model; bootstrap the whole pipeline for SEs.

    The sampling probabilities come from the joint NPMLE of the sample and
    are re-estimated inside every bootstrap replicate. ``B = 0`` skips the
    bootstrap (point estimates only, se and p set to NaN).
    """
    _check_scheme(scheme)
    if s.z is None:
        raise ValueError("sample carries no covariates")
    if s.n <= s.z.shape[1]:
        raise ValueError("need more records than covariate columns")

    def point_estimate(sub: TruncatedSample) -> np.ndarray:
        if scheme == "naive":
            gi = np.ones(sub.n)
        else:
            fit = npmle_joint(sub, tol=tol, max_iter=max_iter)
            if not fit.converged:
                raise NonConvergenceError("NPMLE refit did not converge")
            gi = fit.g.value_at(sub.x)
        beta, _ = _newton(sub.x, sub.z, gi, scheme)
        return beta

    if scheme == "naive":
        gi = np.ones(s.n)
    else:
        fit = npmle_joint(s, tol=tol, max_iter=max_iter)
        gi = fit.g.value_at(s.x)
    beta, iters = _newton(s.x, s.z, gi, scheme)
    p = beta.size
    replicates = None
    if B == 0:
        se = np.full(p, np.nan)
        pval = np.full(p, np.nan)
        failures = 0
    else:
        stats, failures = bootstrap_statistics(
            s,
            B,
            0 if seed is None else seed,
            point_estimate,
            valid_fn=(None if scheme == "naive" else (lambda sub: existence_check(sub).ok)),
            threads=threads,
        )
        replicates = stats
        se = stats.std(axis=0, ddof=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            zstat = np.abs(beta) / se
        pval = np.array([math.erfc(zv / math.sqrt(2.0)) if np.isfinite(zv) else np.nan for zv in zstat])
    return CoxFit(
        beta=beta,
        se=se,
        pvalue=pval,
        scheme=scheme,
        iterations=iters,
        converged=True,
        names=s.z_names,
        B=B,
        failures=failures,
        seed=seed,
        replicates=replicates,
    )


def g_by_group(
    s: TruncatedSample,
    grouping: np.ndarray,
    *,
    tol: float = 1e-6,
    max_iter: int = 10_000,
) -> dict[object, SamplingProbability]:
    """Sampling probabilities estimated separately within each group.

    Diagnostic for the assumption that G(x|z) does not depend on z: overlay
    the returned curves. Groups violating the existence condition are
    skipped with a warning; every group needs at least two records.
    """
    grouping = np.asarray(grouping)
    if grouping.shape != (s.n,):
        raise ValueError("grouping must assign one label per record")
    out: dict[object, SamplingProbability] = {}
    for label in np.unique(grouping):
        idx = np.flatnonzero(grouping == label)
        if idx.size < 2:
            raise ValueError(f"group {label!r} has fewer than 2 records")
        sub = s.take(idx)
        if not existence_check(sub).ok:
            warnings.warn(
                f"group {label!r} violates the existence condition; skipped",
                DtruncWarning,
                stacklevel=2,
            )
            continue
        out[label] = npmle_joint(sub, tol=tol, max_iter=max_iter).g
    return out

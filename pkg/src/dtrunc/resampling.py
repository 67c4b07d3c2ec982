"""Bootstrap standard errors and confidence limits for the fitted cdf.

Replicate streams are spawned from the master seed with numpy's
counter-based Philox generator, one independent stream per replicate slot,
so results are bit-identical however many worker threads execute the
replicates. Failed replicates (existence violation, non-convergence,
degeneracy) are redrawn within their own slot stream and counted; the run
aborts once the total failure count exceeds the replicate budget.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from statistics import NormalDist
from typing import Callable

import numpy as np

from .errors import DegeneracyError, NonConvergenceError
from .npmle import NpmleFit, npmle_joint, npmle_selfconsistency, shen_K
from .sample import TruncatedSample, existence_check

DEFAULT_B_CDF = 500


@dataclass(frozen=True)
class BootstrapResult:
    """Pointwise bootstrap summary of the fitted cdf on a fixed grid."""

    eval_points: np.ndarray
    estimate: np.ndarray
    se: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    level: float
    B: int
    failures: int
    seed: int | None
    method: str


def bootstrap_statistics(
    s: TruncatedSample,
    B: int,
    seed: int,
    stat_fn: Callable[[TruncatedSample], np.ndarray],
    *,
    valid_fn: Callable[[TruncatedSample], bool] | None = None,
    draw_fn: Callable[[np.random.Generator], TruncatedSample] | None = None,
    threads: int = 1,
) -> tuple[np.ndarray, int]:
    """Evaluate ``stat_fn`` on B resamples; returns (B x k stats, failures).

    Resamples default to drawing n records with replacement; ``draw_fn``
    overrides the drawing mechanism. A resample is discarded and redrawn
    when ``valid_fn`` rejects it or ``stat_fn`` raises a degeneracy or
    non-convergence error. Deterministic given (seed, B) regardless of
    ``threads``.
    """
    if B < 2:
        raise ValueError("B must be at least 2")
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    children = ss.spawn(B)

    def run_slot(b: int) -> tuple[np.ndarray, int]:
        rng = np.random.Generator(np.random.Philox(children[b]))
        for attempt in range(B + 1):
            if draw_fn is None:
                idx = rng.integers(0, s.n, size=s.n)
                sub = s.take(idx)
            else:
                sub = draw_fn(rng)
            if valid_fn is not None and not valid_fn(sub):
                continue
            try:
                return np.atleast_1d(np.asarray(stat_fn(sub), dtype=np.float64)), attempt
            except (DegeneracyError, NonConvergenceError):
                continue
        raise DegeneracyError(
            f"bootstrap replicate {b} failed {B + 1} consecutive draws"
        )

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run_slot, range(B)))
    else:
        results = [run_slot(b) for b in range(B)]
    failures = sum(r[1] for r in results)
    if failures > B:
        raise DegeneracyError(
            f"{failures} failed resamples exceed the budget of B={B}"
        )
    return np.stack([r[0] for r in results]), failures


def _summarize(
    eval_points: np.ndarray,
    estimate: np.ndarray,
    stats: np.ndarray,
    level: float,
    method: str,
    B: int,
    failures: int,
    seed,
) -> BootstrapResult:
    se = stats.std(axis=0, ddof=1)
    alpha = 1.0 - level
    if method == "percentile":
        ci_low = np.quantile(stats, alpha / 2, axis=0)
        ci_high = np.quantile(stats, 1.0 - alpha / 2, axis=0)
    elif method == "normal":
        zq = NormalDist().inv_cdf(1.0 - alpha / 2)
        ci_low = np.clip(estimate - zq * se, 0.0, 1.0)
        ci_high = np.clip(estimate + zq * se, 0.0, 1.0)
    else:
        raise ValueError(f"unknown CI method {method!r}")
    return BootstrapResult(
        eval_points=eval_points,
        estimate=estimate,
        se=se,
        ci_low=ci_low,
        ci_high=ci_high,
        level=level,
        B=B,
        failures=failures,
        seed=seed if isinstance(seed, int) else None,
        method=method,
    )


def _fit_for(algo: str) -> Callable[..., NpmleFit]:
    return npmle_selfconsistency if algo == "selfconsistency" else npmle_joint


def simple_bootstrap(
    s: TruncatedSample,
    B: int = DEFAULT_B_CDF,
    level: float = 0.95,
    seed: int = 0,
    method: str = "percentile",
    *,
    eval_points: np.ndarray | None = None,
    algo: str = "joint",
    tol: float = 1e-6,
    max_iter: int = 10_000,
    threads: int = 1,
) -> BootstrapResult:
    """Resample observed triplets with replacement and refit the NPMLE.

    Reports the pointwise standard deviation of the replicate cdfs and
    percentile or normal-approximation confidence limits, evaluated at the
    distinct observed event values (or ``eval_points``).
    """
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie in (0, 1)")
    fit = _fit_for(algo)(s, tol=tol, max_iter=max_iter)
    pts = fit.f.support if eval_points is None else np.asarray(eval_points, dtype=np.float64)
    estimate = fit.f.cdf(pts)

    def stat(sub: TruncatedSample) -> np.ndarray:
        refit = _fit_for(algo)(sub, tol=tol, max_iter=max_iter)
        if not refit.converged:
            raise NonConvergenceError("bootstrap refit did not converge")
        return refit.f.cdf(pts)

    stats, failures = bootstrap_statistics(
        s, B, seed, stat, valid_fn=lambda sub: existence_check(sub).ok, threads=threads
    )
    return _summarize(pts, estimate, stats, level, method, B, failures, seed)


def obvious_bootstrap(
    s: TruncatedSample,
    B: int = DEFAULT_B_CDF,
    level: float = 0.95,
    seed: int = 0,
    *,
    method: str = "percentile",
    eval_points: np.ndarray | None = None,
    tol: float = 1e-6,
    max_iter: int = 10_000,
    threads: int = 1,
) -> BootstrapResult:
    """Model-based bootstrap from the fitted pair (F, K).

    Each replicate draws x* from the fitted event distribution and (u*, v*)
    independently from the fitted truncation distribution, accepting
    triplets with u* <= x* <= v* until n are kept, then refits. Aborts when
    the estimated acceptance probability falls below 1e-4.
    """
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie in (0, 1)")
    fit = npmle_joint(s, tol=tol, max_iter=max_iter)
    if not fit.converged:
        raise NonConvergenceError("obvious bootstrap requires a converged fit")
    K = shen_K(s, fit)
    support = fit.f.support
    fmass = fit.f.mass
    g_at_support = K.sampling_probability(support)
    p_accept = float(np.sum(fmass * g_at_support))
    if p_accept < 1e-4:
        raise DegeneracyError(
            f"acceptance probability {p_accept:.2e} below 1e-4; "
            "model-based resampling is impractical here"
        )
    pts = support if eval_points is None else np.asarray(eval_points, dtype=np.float64)
    estimate = fit.f.cdf(pts)
    n = s.n
    chunk = max(64, int(np.ceil(1.3 * n / p_accept)))

    def draw(rng: np.random.Generator) -> TruncatedSample:
        xs: list[np.ndarray] = []
        us: list[np.ndarray] = []
        vs: list[np.ndarray] = []
        kept = 0
        while kept < n:
            xstar = support[rng.choice(support.size, size=chunk, p=fmass)]
            pick = rng.choice(K.pairs.shape[0], size=chunk, p=K.mass)
            ustar = K.pairs[pick, 0]
            vstar = K.pairs[pick, 1]
            ok = (ustar <= xstar) & (xstar <= vstar)
            xs.append(xstar[ok])
            us.append(ustar[ok])
            vs.append(vstar[ok])
            kept += int(np.count_nonzero(ok))
        x = np.concatenate(xs)[:n]
        u = np.concatenate(us)[:n]
        v = np.concatenate(vs)[:n]
        return TruncatedSample(x=x, u=u, v=v)

    def stat(sub: TruncatedSample) -> np.ndarray:
        refit = npmle_joint(sub, tol=tol, max_iter=max_iter)
        if not refit.converged:
            raise NonConvergenceError("bootstrap refit did not converge")
        return refit.f.cdf(pts)

    stats, failures = bootstrap_statistics(
        s,
        B,
        seed,
        stat,
        valid_fn=lambda sub: existence_check(sub).ok,
        draw_fn=draw,
        threads=threads,
    )
    return _summarize(pts, estimate, stats, level, method, B, failures, seed)

"""Data generators for the interval-sampling designs and a Monte Carlo runner.

Truncation model: U = (1 + tau) * xi^rho - tau with xi uniform on (0, 1)
and V = U + tau, generated independently of the target variables. Event
models: uniform on (0, 1), or the Weibull regression scenario where
X | Z = z has hazard (1/sigma) x^(1/sigma - 1) exp(beta z) and Z is
standard exponential.

All randomness flows through numpy's counter-based Philox generator with
per-trial streams spawned from the master seed, so experiments are
reproducible regardless of scheduling.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .cox import _newton
from .errors import DegeneracyError, DtruncError, DtruncWarning, NonConvergenceError
from .npmle import npmle_joint
from .resampling import simple_bootstrap
from .sample import TruncatedSample

GEN_BLOCK = 4096  # candidate draws per block; fixed so seeds reproduce exactly
MIN_ACCEPTANCE = 1e-4


@dataclass(frozen=True)
class TruncationDesign:
    """Interval-sampling truncation: window width tau, left-limit shape rho."""

    rho: float
    tau: float

    def __post_init__(self) -> None:
        if self.rho <= 0 or self.tau <= 0:
            raise ValueError("rho and tau must be positive")

    def sample(self, n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        xi = rng.random(n)
        u = (1.0 + self.tau) * xi**self.rho - self.tau
        return u, u + self.tau


@dataclass(frozen=True)
class CoxScenario:
    """Weibull regression model with an exponential covariate.

    X | Z = z is Weibull with shape 1/sigma and scale exp(-beta*sigma*z);
    the default beta = 1/sigma gives scale exp(-z).
    """

    sigma: float
    beta: float | None = None

    def __post_init__(self) -> None:
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")

    @property
    def coef(self) -> float:
        return 1.0 / self.sigma if self.beta is None else self.beta

    def sample(self, n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        z = rng.exponential(1.0, n)
        e = rng.exponential(1.0, n)
        x = np.exp(-self.sigma * self.coef * z) * e**self.sigma
        return x, z


class UniformLaw:
    """X uniform on (0, 1), no covariates."""

    def sample(self, n: int, rng: np.random.Generator) -> tuple[np.ndarray, None]:
        return rng.random(n), None


@dataclass(frozen=True)
class UntruncatedDraws:
    """Candidate draws consumed before the n-th acceptance."""

    x: np.ndarray
    z: np.ndarray | None


def _resolve_law(x_law):
    if isinstance(x_law, str):
        if x_law != "uniform01":
            raise ValueError(f"unknown x law {x_law!r}")
        return UniformLaw()
    return x_law


def gen_truncated(
    n: int,
    x_law,
    design: TruncationDesign,
    seed: int,
) -> tuple[TruncatedSample, float, UntruncatedDraws]:
    """Draw candidates until n satisfy u <= x <= v.

    ``x_law`` is "uniform01" or a :class:`CoxScenario`. Returns the
    truncated sample, the realized acceptance rate n / candidates, and all
    candidate draws consumed (the first n of which are an iid untruncated
    sample for benchmark estimators).
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    law = _resolve_law(x_law)
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    rng = np.random.Generator(np.random.Philox(ss))
    xs, zs, us, vs, accepted_idx = [], [], [], [], []
    accepted = 0
    candidates = 0
    while accepted < n:
        x, z = law.sample(GEN_BLOCK, rng)
        u, v = design.sample(GEN_BLOCK, rng)
        ok = (u <= x) & (x <= v)
        xs.append(x)
        zs.append(z)
        us.append(u)
        vs.append(v)
        accepted_idx.append(ok)
        accepted += int(np.count_nonzero(ok))
        candidates += GEN_BLOCK
        if candidates >= 100 * GEN_BLOCK and accepted / candidates < MIN_ACCEPTANCE:
            raise DegeneracyError(
                f"acceptance rate estimate {accepted / candidates:.2e} below "
                f"{MIN_ACCEPTANCE}; the design essentially never samples this law"
            )
    x = np.concatenate(xs)
    u = np.concatenate(us)
    v = np.concatenate(vs)
    ok = np.concatenate(accepted_idx)
    z = None if zs[0] is None else np.concatenate(zs)
    nth = np.flatnonzero(ok)[n - 1]  # index of the n-th acceptance
    consumed = int(nth) + 1
    keep = np.flatnonzero(ok[:consumed])
    sample = TruncatedSample(
        x=x[keep],
        u=u[keep],
        v=v[keep],
        z=None if z is None else z[keep],
    )
    pre = UntruncatedDraws(x=x[:consumed], z=None if z is None else z[:consumed])
    return sample, n / consumed, pre


@dataclass(frozen=True)
class EstimatorSummary:
    """Aggregate performance of one estimator over the completed trials."""

    name: str
    truth: float
    bias: float
    sd: float
    mse: float
    trials: int


@dataclass(frozen=True)
class ExperimentReport:
    """Monte Carlo summary: one row per estimator/quantity."""

    study: str
    n: int
    trials_requested: int
    trials_used: int
    seed: int
    acceptance_rate: float
    failures: int
    rows: tuple[EstimatorSummary, ...]
    warnings: tuple[str, ...] = field(default=())
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "study": self.study,
            "n": self.n,
            "trials_requested": self.trials_requested,
            "trials_used": self.trials_used,
            "seed": self.seed,
            "acceptance_rate": self.acceptance_rate,
            "failures": self.failures,
            "warnings": list(self.warnings),
            "extra": self.extra,
            "rows": [
                {
                    "name": r.name,
                    "truth": r.truth,
                    "bias": r.bias,
                    "sd": r.sd,
                    "mse": r.mse,
                    "trials": r.trials,
                }
                for r in self.rows
            ],
        }


@dataclass(frozen=True)
class ExperimentConfig:
    """Declarative description of one Monte Carlo experiment."""

    study: str  # "cox" or "boot_se"
    n: int = 250
    trials: int = 100
    seed: int = 0
    B: int = 99
    estimators: tuple[str, ...] = ("ben", "nai", "man", "ren")
    design: TruncationDesign = field(default_factory=lambda: TruncationDesign(rho=0.5, tau=0.25))
    scenario: CoxScenario = field(default_factory=lambda: CoxScenario(sigma=0.1))
    eval_quantiles: tuple[float, ...] = (0.25, 0.5, 0.75)
    oracle_trials: int = 1000
    tol: float = 1e-6
    max_iter: int = 10_000

    def __post_init__(self) -> None:
        if self.study not in ("cox", "boot_se"):
            raise ValueError("study must be 'cox' or 'boot_se'")
        unknown = set(self.estimators) - {"ben", "nai", "man", "ren"}
        if unknown:
            raise ValueError(f"unknown estimators {sorted(unknown)}")


def preset_table4(**overrides) -> ExperimentConfig:
    """Weibull-regression comparison of the truncation-aware estimators."""
    return replace(ExperimentConfig(study="cox"), **overrides)


def preset_table3(**overrides) -> ExperimentConfig:
    """Bootstrap-SE accuracy for the uniform design at the three quartiles."""
    return replace(ExperimentConfig(study="boot_se"), **overrides)


_PRESETS = {"table3": preset_table3, "table4": preset_table4}


def load_config(path: str) -> ExperimentConfig:
    """Parse a key = value experiment file; '#' starts a comment.

    Recognized keys: preset, study, n, trials, seed, B, estimators (comma
    list), rho, tau, sigma, beta, oracle_trials, tol, max_iter.
    """
    values: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise DtruncError(f"{path}:{lineno}: expected 'key = value'")
            key, val = (part.strip() for part in line.split("=", 1))
            values[key] = val
    preset = values.pop("preset", None)
    base = _PRESETS[preset]() if preset in _PRESETS else ExperimentConfig(
        study=values.pop("study", "cox")
    )
    kwargs: dict = {}
    if "study" in values:
        kwargs["study"] = values.pop("study")
    for key in ("n", "trials", "seed", "B", "oracle_trials", "max_iter"):
        if key in values:
            kwargs[key] = int(values.pop(key))
    if "tol" in values:
        kwargs["tol"] = float(values.pop("tol"))
    if "estimators" in values:
        kwargs["estimators"] = tuple(e.strip() for e in values.pop("estimators").split(","))
    design_kwargs = {}
    for key in ("rho", "tau"):
        if key in values:
            design_kwargs[key] = float(values.pop(key))
    if design_kwargs:
        kwargs["design"] = replace(base.design, **design_kwargs)
    scen_kwargs = {}
    if "sigma" in values:
        scen_kwargs["sigma"] = float(values.pop("sigma"))
    if "beta" in values:
        scen_kwargs["beta"] = float(values.pop("beta"))
    if scen_kwargs:
        kwargs["scenario"] = replace(base.scenario, **scen_kwargs)
    if "eval_quantiles" in values:
        kwargs["eval_quantiles"] = tuple(
            float(q) for q in values.pop("eval_quantiles").split(",")
        )
    if values:
        raise DtruncError(f"{path}: unrecognized keys {sorted(values)}")
    return replace(base, **kwargs)


def _summarize(name: str, estimates: np.ndarray, truth: float) -> EstimatorSummary:
    m = estimates.size
    bias = float(estimates.mean() - truth)
    sd = float(estimates.std(ddof=1)) if m > 1 else float("nan")
    mse = float(np.mean((estimates - truth) ** 2))
    return EstimatorSummary(name=name, truth=truth, bias=bias, sd=sd, mse=mse, trials=m)


def _run_cox_study(config: ExperimentConfig) -> ExperimentReport:
    truth = config.scenario.coef
    children = np.random.SeedSequence(config.seed).spawn(config.trials)
    collected: dict[str, list[float]] = {name: [] for name in config.estimators}
    acc_rates = []
    failures = 0
    for trial in range(config.trials):
        trial_seed = children[trial]
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", DtruncWarning)
                s, acc, pre = gen_truncated(config.n, config.scenario, config.design, trial_seed)
                fits = _fit_cox_trial(config, s, pre)
        except DtruncError:
            failures += 1
            continue
        acc_rates.append(acc)
        for name, value in fits.items():
            collected[name].append(value)
    used = config.trials - failures
    warnings_list = []
    if used < 2:
        warnings_list.append("fewer than 2 completed trials: SD undefined")
    rows = tuple(
        _summarize(name, np.asarray(collected[name]), truth) for name in config.estimators
    )
    return ExperimentReport(
        study="cox",
        n=config.n,
        trials_requested=config.trials,
        trials_used=used,
        seed=config.seed,
        acceptance_rate=float(np.mean(acc_rates)) if acc_rates else float("nan"),
        failures=failures,
        rows=rows,
        warnings=tuple(warnings_list),
        extra={"sigma": config.scenario.sigma, "rho": config.design.rho, "tau": config.design.tau},
    )


def _fit_cox_trial(config: ExperimentConfig, s: TruncatedSample, pre: UntruncatedDraws) -> dict[str, float]:
    fits: dict[str, float] = {}
    gi = None
    if {"man", "ren"} & set(config.estimators):
        fit = npmle_joint(s, tol=config.tol, max_iter=config.max_iter)
        if not fit.converged:
            raise NonConvergenceError("trial NPMLE did not converge")
        gi = fit.g.value_at(s.x)
    n = config.n
    for name in config.estimators:
        if name == "ben":
            beta, _ = _newton(pre.x[:n], pre.z[:n].reshape(-1, 1), np.ones(n), "naive")
        elif name == "nai":
            beta, _ = _newton(s.x, s.z, np.ones(s.n), "naive")
        elif name == "man":
            beta, _ = _newton(s.x, s.z, gi, "mandel")
        else:
            beta, _ = _newton(s.x, s.z, gi, "rennert")
        fits[name] = float(beta[0])
    return fits


def _run_boot_se_study(config: ExperimentConfig) -> ExperimentReport:
    pts = np.asarray(config.eval_quantiles, dtype=np.float64)  # quartiles of U(0,1)
    root = np.random.SeedSequence(config.seed)
    children = root.spawn(config.oracle_trials + config.trials)
    # Monte Carlo oracle for the true SE of F_n at the quartiles
    oracle_cdfs = np.empty((config.oracle_trials, pts.size))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DtruncWarning)
        for trial in range(config.oracle_trials):
            s, _, _ = gen_truncated(config.n, "uniform01", config.design, children[trial])
            fit = npmle_joint(s, tol=config.tol, max_iter=config.max_iter)
            oracle_cdfs[trial] = fit.f.cdf(pts)
    oracle_sd = oracle_cdfs.std(axis=0, ddof=1)

    ses = []
    acc_rates = []
    failures = 0
    for trial in range(config.trials):
        gen_ss, boot_ss = children[config.oracle_trials + trial].spawn(2)
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", DtruncWarning)
                s, acc, _ = gen_truncated(config.n, "uniform01", config.design, gen_ss)
                boot = simple_bootstrap(
                    s,
                    B=config.B,
                    seed=boot_ss,
                    eval_points=pts,
                    tol=config.tol,
                    max_iter=config.max_iter,
                )
        except DtruncError:
            failures += 1
            continue
        ses.append(boot.se)
        acc_rates.append(acc)
    used = config.trials - failures
    warnings_list = []
    if used < 2:
        warnings_list.append("fewer than 2 completed trials: SD undefined")
    ses_arr = np.asarray(ses)
    rows = tuple(
        _summarize(f"boot_se@x{q}", ses_arr[:, k], float(oracle_sd[k]))
        for k, q in enumerate(config.eval_quantiles)
    )
    return ExperimentReport(
        study="boot_se",
        n=config.n,
        trials_requested=config.trials,
        trials_used=used,
        seed=config.seed,
        acceptance_rate=float(np.mean(acc_rates)) if acc_rates else float("nan"),
        failures=failures,
        rows=rows,
        warnings=tuple(warnings_list),
        extra={
            "B": config.B,
            "oracle_trials": config.oracle_trials,
            "oracle_sd": [float(v) for v in oracle_sd],
            "rho": config.design.rho,
            "tau": config.design.tau,
        },
    )


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    """Run the configured Monte Carlo study; failing trials are excluded."""
    if config.study == "cox":
        return _run_cox_study(config)
    return _run_boot_se_study(config)

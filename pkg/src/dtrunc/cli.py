"""Command-line interface: one subcommand per analysis, file-based I/O.

Every run writes its data files plus a ``manifest.json`` recording the
subcommand, resolved options, a content hash of the input, the seed, the
tool version, and a timestamp; identical manifests (minus timestamp)
produce byte-identical data files. Option defaults can be overridden via
environment variables with the ``DTRUNC_`` prefix (e.g.
``DTRUNC_ESTIMATE_TOL``).

Exit codes: 2 parse/schema problems, 3 validation failures,
4 non-convergence, 5 degeneracy.
"""

from __future__ import annotations

import datetime
import functools
import hashlib
import json
import secrets
import sys
import warnings as warnings_mod
from pathlib import Path

import click
import numpy as np

from . import __version__
from .cif import DEFAULT_B_CIF, cif as cif_op
from .cox import DEFAULT_B_COX, cox_fit, g_by_group
from .errors import (
    DegeneracyError,
    NonConvergenceError,
    ParseError,
    SchemaError,
    ValidationError,
)
from .npmle import npmle_joint, npmle_selfconsistency
from .resampling import DEFAULT_B_CDF, obvious_bootstrap, simple_bootstrap
from .sample import existence_check, load_sample
from .sef import sef_cdf, sef_fit
from .simulate import load_config, preset_table3, preset_table4, run_experiment
from .tau import DEFAULT_B_TAU, kendall_tau_test

EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_NONCONVERGENCE = 4
EXIT_DEGENERACY = 5


def _fmt(value: float) -> str:
    """Shortest decimal that round-trips through float()."""
    return repr(float(value))


def _write_csv(path: Path, header: list[str], columns: list[np.ndarray]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in zip(*columns):
            fh.write(",".join(_fmt(c) if isinstance(c, (float, np.floating)) else str(c) for c in row) + "\n")


def _write_json(path: Path, obj: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _digest(path: str | None) -> str | None:
    if path is None:
        return None
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _manifest(
    out_dir: Path,
    command: str,
    options: dict,
    input_path: str | None,
    seed: int | None,
    warnings_list: list[str],
) -> None:
    _write_json(
        out_dir / "manifest.json",
        {
            "command": command,
            "options": options,
            "input_sha256": _digest(input_path),
            "seed": seed,
            "version": __version__,
            "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
            "warnings": warnings_list,
        },
    )


def _resolve_seed(seed: int | None) -> int:
    return secrets.randbits(63) if seed is None else seed


def _exit_code(exc: Exception) -> int:
    if isinstance(exc, (SchemaError, ParseError)):
        return EXIT_PARSE
    if isinstance(exc, ValidationError):
        return EXIT_VALIDATION
    if isinstance(exc, NonConvergenceError):
        return EXIT_NONCONVERGENCE
    if isinstance(exc, DegeneracyError):
        return EXIT_DEGENERACY
    raise exc


def handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except Exception as exc:  # noqa: BLE001 - mapped onto the exit contract
            code = _exit_code(exc)
            click.echo(f"error: {exc}", err=True)
            sys.exit(code)

    return wrapper


def _out_dir(path: str) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


input_opt = click.option("--input", "input_path", required=True, type=click.Path(exists=True, dir_okay=False))
outdir_opt = click.option("--out-dir", default=".", show_default=True)
seed_opt = click.option("--seed", type=int, default=None, help="Omitted: one is drawn and recorded.")
threads_opt = click.option("--threads", type=int, default=1, show_default=True)
tol_opt = click.option("--tol", type=float, default=1e-6, show_default=True)
maxiter_opt = click.option("--max-iter", type=int, default=10_000, show_default=True)
column_opt = click.option(
    "--column",
    "columns",
    multiple=True,
    metavar="KEY=NAME",
    help="Header mapping, e.g. --column x=age --column u=left.",
)
drop_opt = click.option("--drop-invalid", is_flag=True, help="Drop rows violating u <= x <= v.")


def _column_map(columns: tuple[str, ...]) -> dict | None:
    if not columns:
        return None
    cmap: dict = {}
    for spec in columns:
        if "=" not in spec:
            raise click.UsageError(f"--column expects KEY=NAME, got {spec!r}")
        key, name = spec.split("=", 1)
        if key == "z" and "+" in name:
            cmap[key] = name.split("+")
        else:
            cmap[key] = name
    return cmap


@click.group()
@click.version_option(__version__)
def main() -> None:
    """Analysis of randomly doubly truncated data."""


@main.command()
@input_opt
@outdir_opt
@column_opt
@drop_opt
@click.option("--algo", type=click.Choice(["selfconsistency", "joint"]), default="joint", show_default=True)
@tol_opt
@maxiter_opt
@handle_errors
def estimate(input_path, out_dir, columns, drop_invalid, algo, tol, max_iter) -> None:
    """NPMLE of the event cdf and the sampling probabilities."""
    out = _out_dir(out_dir)
    s = load_sample(input_path, _column_map(columns), drop_invalid=drop_invalid)
    fit_fn = npmle_selfconsistency if algo == "selfconsistency" else npmle_joint
    with warnings_mod.catch_warnings(record=True) as caught:
        warnings_mod.simplefilter("always")
        fit = fit_fn(s, tol=tol, max_iter=max_iter)
    warn_msgs = [str(w.message) for w in caught]
    _write_csv(
        out / "estimate.csv",
        ["time", "jump", "cdf", "g"],
        [fit.f.support, fit.f.mass, fit.f.cum_mass, fit.g.value],
    )
    _write_json(
        out / "fit.json",
        {
            "algo": algo,
            "n": s.n,
            "support_points": int(fit.f.support.size),
            "iterations": fit.iterations,
            "final_change": fit.final_change,
            "converged": fit.converged,
            "existence_ok": fit.existence_ok,
            "loglik": fit.loglik,
        },
    )
    _manifest(
        out,
        "estimate",
        {"algo": algo, "tol": tol, "max_iter": max_iter, "drop_invalid": drop_invalid},
        input_path,
        None,
        warn_msgs,
    )
    if not fit.converged:
        click.echo("warning: iteration did not converge", err=True)
        sys.exit(EXIT_NONCONVERGENCE)


@main.command()
@input_opt
@outdir_opt
@column_opt
@drop_opt
@click.option("--kind", type=click.Choice(["simple", "obvious"]), default="simple", show_default=True)
@click.option("--B", "B", type=int, default=DEFAULT_B_CDF, show_default=True)
@click.option("--level", type=float, default=0.95, show_default=True)
@click.option("--method", type=click.Choice(["percentile", "normal"]), default="percentile", show_default=True)
@seed_opt
@threads_opt
@tol_opt
@maxiter_opt
@handle_errors
def bootstrap(input_path, out_dir, columns, drop_invalid, kind, B, level, method, seed, threads, tol, max_iter) -> None:
    """Bootstrap standard errors and confidence limits for the cdf."""
    out = _out_dir(out_dir)
    seed = _resolve_seed(seed)
    s = load_sample(input_path, _column_map(columns), drop_invalid=drop_invalid)
    boot_fn = simple_bootstrap if kind == "simple" else obvious_bootstrap
    result = boot_fn(
        s, B=B, level=level, seed=seed, method=method, tol=tol, max_iter=max_iter, threads=threads
    )
    _write_csv(
        out / "bootstrap.csv",
        ["time", "cdf", "se", "ci_low", "ci_high"],
        [result.eval_points, result.estimate, result.se, result.ci_low, result.ci_high],
    )
    _write_json(
        out / "bootstrap.json",
        {
            "kind": kind,
            "B": result.B,
            "failures": result.failures,
            "seed": seed,
            "level": level,
            "method": method,
        },
    )
    _manifest(
        out,
        "bootstrap",
        {"kind": kind, "B": B, "level": level, "method": method, "threads": threads, "tol": tol},
        input_path,
        seed,
        [],
    )


@main.command()
@input_opt
@outdir_opt
@column_opt
@drop_opt
@click.option("--scheme", type=click.Choice(["mandel", "rennert", "naive"]), default="mandel", show_default=True)
@click.option("--B", "B", type=int, default=DEFAULT_B_COX, show_default=True)
@seed_opt
@threads_opt
@tol_opt
@maxiter_opt
@click.option("--dump-replicates", is_flag=True, help="Also write replicate estimates as CSV.")
@handle_errors
def cox(input_path, out_dir, columns, drop_invalid, scheme, B, seed, threads, tol, max_iter, dump_replicates) -> None:
    """Inverse-probability-weighted Cox regression."""
    out = _out_dir(out_dir)
    seed = _resolve_seed(seed)
    s = load_sample(input_path, _column_map(columns), drop_invalid=drop_invalid)
    fit = cox_fit(s, scheme=scheme, B=B, seed=seed, tol=tol, max_iter=max_iter, threads=threads)
    _write_json(
        out / "cox.json",
        {
            "scheme": scheme,
            "B": fit.B,
            "failures": fit.failures,
            "seed": seed,
            "iterations": fit.iterations,
            "covariates": [
                {
                    "name": name,
                    "estimate": float(b),
                    "se": None if np.isnan(se) else float(se),
                    "p": None if np.isnan(p) else float(p),
                }
                for name, b, se, p in zip(fit.names, fit.beta, fit.se, fit.pvalue)
            ],
        },
    )
    if dump_replicates and fit.replicates is not None:
        _write_csv(
            out / "cox_replicates.csv",
            list(fit.names),
            [fit.replicates[:, j] for j in range(fit.replicates.shape[1])],
        )
    _manifest(
        out,
        "cox",
        {"scheme": scheme, "B": B, "threads": threads, "tol": tol, "max_iter": max_iter},
        input_path,
        seed,
        [],
    )


@main.command()
@input_opt
@outdir_opt
@column_opt
@drop_opt
@click.option("--method", type=click.Choice(["indep", "dep"]), default="indep", show_default=True)
@click.option("--B", "B", type=int, default=DEFAULT_B_CIF, show_default=True)
@click.option("--level", type=float, default=0.95, show_default=True)
@seed_opt
@threads_opt
@tol_opt
@maxiter_opt
@handle_errors
def cif(input_path, out_dir, columns, drop_invalid, method, B, level, seed, threads, tol, max_iter) -> None:
    """Cumulative incidence functions for competing risks."""
    out = _out_dir(out_dir)
    seed = _resolve_seed(seed)
    s = load_sample(input_path, _column_map(columns), drop_invalid=drop_invalid)
    fit = cif_op(s, method=method, B=B, seed=seed, level=level, tol=tol, max_iter=max_iter, threads=threads)
    k = fit.times.size
    events: list[int] = []
    times: list[float] = []
    vals: list[float] = []
    ses: list[float] = []
    lows: list[float] = []
    highs: list[float] = []
    for lb in fit.labels:
        events.extend([lb] * k)
        times.extend(fit.times.tolist())
        vals.extend(fit.curves[lb].tolist())
        ses.extend((fit.se[lb] if fit.se else np.full(k, np.nan)).tolist())
        lows.extend((fit.ci_low[lb] if fit.ci_low else np.full(k, np.nan)).tolist())
        highs.extend((fit.ci_high[lb] if fit.ci_high else np.full(k, np.nan)).tolist())
    _write_csv(
        out / "cif.csv",
        ["event", "time", "cif", "se", "ci_low", "ci_high"],
        [np.asarray(events), np.asarray(times), np.asarray(vals), np.asarray(ses), np.asarray(lows), np.asarray(highs)],
    )
    _write_json(
        out / "cif.json",
        {
            "method": method,
            "labels": list(fit.labels),
            "group_sizes": {str(k_): v for k_, v in fit.group_sizes.items()},
            "B": fit.B,
            "failures": fit.failures,
            "seed": seed,
            "level": level,
        },
    )
    _manifest(
        out,
        "cif",
        {"method": method, "B": B, "level": level, "threads": threads, "tol": tol},
        input_path,
        seed,
        [],
    )


@main.command()
@input_opt
@outdir_opt
@column_opt
@drop_opt
@click.option("--B", "B", type=int, default=DEFAULT_B_TAU, show_default=True)
@seed_opt
@threads_opt
@handle_errors
def indeptest(input_path, out_dir, columns, drop_invalid, B, seed, threads) -> None:
    """Quasi-independence test (conditional Kendall's tau)."""
    out = _out_dir(out_dir)
    seed = _resolve_seed(seed)
    s = load_sample(input_path, _column_map(columns), drop_invalid=drop_invalid)
    test = kendall_tau_test(s, B=B, seed=seed, threads=threads)
    _write_json(
        out / "indeptest.json",
        {
            "tau": test.tau,
            "n_comparable": test.n_comparable,
            "pvalue": test.pvalue,
            "B": test.B,
            "seed": seed,
        },
    )
    _manifest(out, "indeptest", {"B": B, "threads": threads}, input_path, seed, [])


@main.command()
@input_opt
@outdir_opt
@column_opt
@drop_opt
@click.option("--grid", type=int, default=200, show_default=True, help="Points in the exported cdf curve.")
@handle_errors
def sef(input_path, out_dir, columns, drop_invalid, grid) -> None:
    """One-parameter special-exponential-family fit of the cdf."""
    out = _out_dir(out_dir)
    s = load_sample(input_path, _column_map(columns), drop_invalid=drop_invalid)
    fit = sef_fit(s)
    xs = np.linspace(fit.a, fit.b, grid)
    _write_csv(out / "sef_curve.csv", ["x", "cdf"], [xs, np.asarray(sef_cdf(fit, xs))])
    _write_json(
        out / "sef.json",
        {"eta": fit.eta, "a": fit.a, "b": fit.b, "loglik": fit.loglik, "aic": fit.aic},
    )
    _manifest(out, "sef", {"grid": grid}, input_path, None, [])


@main.command()
@input_opt
@outdir_opt
@column_opt
@drop_opt
@click.option("--group", "group_col", default=None, help="Column with group labels for per-group G curves.")
@tol_opt
@maxiter_opt
@handle_errors
def diagnose(input_path, out_dir, columns, drop_invalid, group_col, tol, max_iter) -> None:
    """Existence/uniqueness diagnostics; optional per-group G overlay data."""
    out = _out_dir(out_dir)
    cmap = _column_map(columns) or {}
    s = load_sample(input_path, cmap, drop_invalid=drop_invalid)
    report = existence_check(s)
    payload = {
        "n": s.n,
        "ok": report.ok,
        "min_s1": int(report.s1.min()),
        "min_s2": int(report.s2.min()),
        "s1": report.s1.tolist(),
        "s2": report.s2.tolist(),
        "violating_indices": list(report.violating_indices),
        "dropped_rows": getattr(s, "dropped_rows", 0),
    }
    _write_json(out / "diagnose.json", payload)
    status = "satisfied" if report.ok else "VIOLATED"
    click.echo(
        f"existence condition {status}: min S1 = {payload['min_s1']}, min S2 = {payload['min_s2']}"
        + ("" if report.ok else f"; offending records {payload['violating_indices']}"),
        err=True,
    )
    warn_msgs = [] if report.ok else ["existence condition violated"]
    if group_col is not None:
        raw = load_sample(input_path, {**cmap, "z": group_col}, drop_invalid=drop_invalid)
        labels = raw.z[:, 0].astype(np.int64)
        curves = g_by_group(s, labels, tol=tol, max_iter=max_iter)
        gcol: list[int] = []
        tcol: list[float] = []
        vcol: list[float] = []
        for lb, sp in curves.items():
            gcol.extend([int(lb)] * sp.at.size)
            tcol.extend(sp.at.tolist())
            vcol.extend(sp.value.tolist())
        _write_csv(
            out / "group_g.csv",
            ["group", "time", "g"],
            [np.asarray(gcol), np.asarray(tcol), np.asarray(vcol)],
        )
    _manifest(out, "diagnose", {"group": group_col}, input_path, None, warn_msgs)


@main.command()
@outdir_opt
@click.option("--preset", type=click.Choice(["table3", "table4"]), default=None)
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--n", type=int, default=None)
@click.option("--trials", type=int, default=None)
@click.option("--B", "B", type=int, default=None)
@seed_opt
@handle_errors
def simulate(out_dir, preset, config_path, n, trials, B, seed) -> None:
    """Monte Carlo experiments over the built-in simulation designs."""
    if (preset is None) == (config_path is None):
        raise click.UsageError("provide exactly one of --preset or --config")
    out = _out_dir(out_dir)
    seed = _resolve_seed(seed)
    if config_path is not None:
        config = load_config(config_path)
    else:
        config = preset_table3() if preset == "table3" else preset_table4()
    overrides = {"seed": seed}
    if n is not None:
        overrides["n"] = n
    if trials is not None:
        overrides["trials"] = trials
    if B is not None:
        overrides["B"] = B
    from dataclasses import replace

    config = replace(config, **overrides)
    report = run_experiment(config)
    _write_csv(
        out / "report.csv",
        ["name", "truth", "bias", "sd", "mse", "trials"],
        [
            np.asarray([r.name for r in report.rows]),
            np.asarray([r.truth for r in report.rows]),
            np.asarray([r.bias for r in report.rows]),
            np.asarray([r.sd for r in report.rows]),
            np.asarray([r.mse for r in report.rows]),
            np.asarray([r.trials for r in report.rows]),
        ],
    )
    _write_json(out / "report.json", report.to_dict())
    _manifest(
        out,
        "simulate",
        {"preset": preset, "config": config_path, "n": config.n, "trials": config.trials, "B": config.B},
        config_path,
        seed,
        list(report.warnings),
    )


def run() -> None:
    """Entry point wired in pyproject; enables DTRUNC_* env defaults."""
    main(auto_envvar_prefix="DTRUNC")


if __name__ == "__main__":
    run()

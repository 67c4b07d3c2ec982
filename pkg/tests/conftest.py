"""Shared fixtures and the acceptance-suite summary hook."""

from __future__ import annotations

import numpy as np
import pytest

from dtrunc import CoxScenario, TruncatedSample, TruncationDesign, gen_truncated

# Two small hand-checkable designs used throughout: D3 satisfies the
# existence condition and has a closed-form NPMLE; DV violates it.
D3_ROWS = [(1.0, 0.0, 2.5), (2.0, 0.5, 3.0), (3.0, 1.5, 4.0)]
DV_ROWS = [(1.0, 0.0, 1.5), (2.0, 1.0, 3.0), (3.0, 2.5, 3.5)]

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0  # = 0.618034, the D3 sampling probability
D3_MASS = ((3.0 - np.sqrt(5.0)) / 2.0, np.sqrt(5.0) - 2.0, (3.0 - np.sqrt(5.0)) / 2.0)


def make_sample(rows, **kwargs) -> TruncatedSample:
    x, u, v = (np.array(col, dtype=float) for col in zip(*rows))
    return TruncatedSample(x=x, u=u, v=v, **kwargs)


@pytest.fixture
def d3() -> TruncatedSample:
    return make_sample(D3_ROWS)


@pytest.fixture
def dv() -> TruncatedSample:
    return make_sample(DV_ROWS)


@pytest.fixture
def all_cover() -> TruncatedSample:
    """Windows covering every event value: truncation has no effect."""
    rng = np.random.default_rng(42)
    x = rng.uniform(1.0, 2.0, 40)
    x[5] = x[11]  # include a tie
    return TruncatedSample(x=x, u=np.zeros(40), v=np.full(40, 3.0))


def uniform_design_sample(n: int, seed: int, rho: float = 1.0) -> TruncatedSample:
    """One draw from the uniform event law under interval sampling."""
    s, _, _ = gen_truncated(n, "uniform01", TruncationDesign(rho=rho, tau=0.25), seed)
    return s


def uniform_ok_sample(n: int, seed: int, rho: float = 1.0) -> TruncatedSample:
    """First existence-satisfying draw at or after ``seed`` (deterministic)."""
    from dtrunc import existence_check

    for offset in range(50):
        s = uniform_design_sample(n, seed + 1_000_000 * offset, rho)
        if existence_check(s).ok:
            return s
    raise RuntimeError("no existence-satisfying sample found")


def cox_design_sample(n: int, seed: int, sigma: float = 0.1):
    s, acc, pre = gen_truncated(
        n, CoxScenario(sigma=sigma), TruncationDesign(rho=0.5, tau=0.25), seed
    )
    return s, acc, pre


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One line per acceptance criterion at the end of the run."""
    lines = []
    for outcome in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(outcome, []):
            name = getattr(report, "nodeid", "")
            if "test_acceptance.py::test_c" in name:
                label = name.split("::")[-1]
                lines.append((label, outcome.upper()))
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for label, outcome in sorted(lines):
        terminalreporter.write_line(f"{label}: {'PASS' if outcome == 'PASSED' else outcome}")

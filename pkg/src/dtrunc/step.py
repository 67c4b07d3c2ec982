"""Discrete distributions on a finite support: the carrier for fitted cdfs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MASS_TOL = 1e-12


@dataclass(frozen=True)
class StepDistribution:
    """Probability masses on a strictly increasing support.

    The cdf is right-continuous: F(t) sums the masses at support points <= t.
    """

    support: np.ndarray
    mass: np.ndarray

    def __post_init__(self) -> None:
        support = np.ascontiguousarray(self.support, dtype=np.float64)
        mass = np.ascontiguousarray(self.mass, dtype=np.float64)
        if support.ndim != 1 or support.shape != mass.shape:
            raise ValueError("support and mass must be 1-d arrays of equal length")
        if support.size == 0:
            raise ValueError("empty support")
        if np.any(np.diff(support) <= 0):
            raise ValueError("support must be strictly increasing")
        if np.any(mass < 0):
            raise ValueError("negative mass")
        if abs(mass.sum() - 1.0) > MASS_TOL:
            raise ValueError(f"masses sum to {mass.sum()!r}, expected 1 within {MASS_TOL}")
        support.flags.writeable = False
        mass.flags.writeable = False
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "mass", mass)

    @property
    def cum_mass(self) -> np.ndarray:
        return np.cumsum(self.mass)

    def cdf(self, t):
        """Right-continuous cdf F(t); vectorized over t."""
        idx = np.searchsorted(self.support, t, side="right")
        cum = np.concatenate(([0.0], np.minimum(self.cum_mass, 1.0)))
        return cum[idx]

    def cdf_left(self, t):
        """Left limit F(t-); vectorized over t."""
        idx = np.searchsorted(self.support, t, side="left")
        cum = np.concatenate(([0.0], np.minimum(self.cum_mass, 1.0)))
        return cum[idx]

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        idx = rng.choice(self.support.size, size=n, p=self.mass)
        return self.support[idx]


def eval_cdf(f: StepDistribution, t):
    """F(t), right-continuous."""
    return f.cdf(t)


def eval_cdf_leftlimit(f: StepDistribution, t):
    """F(t-), the left limit of the cdf at t."""
    return f.cdf_left(t)

"""Exception hierarchy shared across the package.

The CLI maps these onto its exit-code contract: schema/parse problems
exit 2, validation failures exit 3, non-convergence exits 4, and any
degeneracy exits 5.
"""

from __future__ import annotations


class DtruncError(Exception):
    """Base class for all errors raised by this package."""


class SchemaError(DtruncError):
    """Input file lacks a required column or has an unusable header."""


class ParseError(DtruncError):
    """A cell could not be parsed as a number; the message names the row."""


class ValidationError(DtruncError):
    """Records violate the observability condition u <= x <= v."""

    def __init__(self, message: str, rows: list[int] | None = None) -> None:
        super().__init__(message)
        self.rows = rows or []


class NonConvergenceError(DtruncError):
    """An iterative solver exhausted its iteration budget."""


class DegeneracyError(DtruncError):
    """A computation hit a degenerate configuration (zero risk mass,
    rejected resampling budget, vanishing acceptance probability, ...)."""


class NonIdentifiableError(DegeneracyError):
    """The data carry no information about the requested parameter."""


class GroupExistenceError(DegeneracyError):
    """A per-group NPMLE fit is blocked by the existence condition."""

    def __init__(self, message: str, group: object = None) -> None:
        super().__init__(message)
        self.group = group


class UndefinedStatisticError(DegeneracyError):
    """The requested statistic is undefined on this sample."""


class ZeroVarianceError(DegeneracyError):
    """The statistic has no sampling variability on this sample."""


class DtruncWarning(UserWarning):
    """Warnings emitted for recoverable but suspicious situations."""

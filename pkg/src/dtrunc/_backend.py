"""Kernel backend selection: numba-compiled loops or pure numpy.

The active backend is chosen once at import from the ``DTRUNC_BACKEND``
environment variable ("numba" or "numpy"); it defaults to numba when the
package is importable and silently falls back to numpy otherwise.
``set_backend`` allows tests and benchmarks to switch at runtime.
"""

from __future__ import annotations

import os
import warnings

from .errors import DtruncWarning

try:
    from numba import njit  # noqa: F401

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

_VALID = ("numba", "numpy")
_requested = os.environ.get("DTRUNC_BACKEND", "").strip().lower()
if _requested and _requested not in _VALID:
    warnings.warn(
        f"DTRUNC_BACKEND={_requested!r} not recognized; expected one of {_VALID}",
        DtruncWarning,
        stacklevel=1,
    )
    _requested = ""

if _requested == "numpy":
    _active = "numpy"
elif _requested == "numba" and not HAVE_NUMBA:
    warnings.warn(
        "DTRUNC_BACKEND=numba requested but numba is not importable; using numpy",
        DtruncWarning,
        stacklevel=1,
    )
    _active = "numpy"
else:
    _active = "numba" if HAVE_NUMBA else "numpy"


def active_backend() -> str:
    """Name of the backend currently used for the hot kernels."""
    return _active


def using_numba() -> bool:
    return _active == "numba"


def set_backend(name: str) -> str:
    """Switch the kernel backend at runtime; returns the previous one."""
    global _active
    if name not in _VALID:
        raise ValueError(f"backend must be one of {_VALID}, got {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is not installed")
    previous = _active
    _active = name
    return previous

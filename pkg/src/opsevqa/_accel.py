"""Numba switch.

Kernels in :mod:`opsevqa.kernels` exist twice: a ``@njit`` loop version and a
pure-numpy version. The loop versions are used when numba imports and the
environment variable ``OPSEVQA_DISABLE_NUMBA`` is unset (or ``0``).
"""
import os

DISABLE_ENV = "OPSEVQA_DISABLE_NUMBA"

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and os.environ.get(DISABLE_ENV, "0").strip().lower() in ("", "0", "false", "no")


def njit(func):
    """``numba.njit(cache=True)`` when numba is importable, identity otherwise."""
    if not HAVE_NUMBA:
        return func
    return numba.njit(cache=True)(func)

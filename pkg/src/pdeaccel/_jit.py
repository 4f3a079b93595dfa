"""Numba switch.

Set ``PDEACCEL_NO_JIT=1`` to force the pure-numpy kernels.  Numba is also
skipped silently when it cannot be imported.
"""
import os

NUMBA_DISABLED = os.environ.get("PDEACCEL_NO_JIT", "").strip().lower() in ("1", "true", "yes")

try:
    from numba import njit as _njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _njit = None
    NUMBA_AVAILABLE = False

USE_NUMBA = NUMBA_AVAILABLE and not NUMBA_DISABLED


def njit(fn):
    """``numba.njit`` with the package's fixed options, or identity without numba."""
    if _njit is None:
        return fn
    return _njit(cache=True, nogil=True)(fn)

"""Optional numba acceleration.

Set ``MMASSIGN_NO_NUMBA=1`` (or numba's own ``NUMBA_DISABLE_JIT=1``) to run the
kernels as plain numpy code.  The kernels are written so that the same source
runs in both modes.
"""
from __future__ import annotations

import os

_disabled = os.environ.get("MMASSIGN_NO_NUMBA", "0") not in ("", "0", "false", "False")

try:
    if _disabled:
        raise ImportError
    from numba import njit as _njit

    HAVE_NUMBA = os.environ.get("NUMBA_DISABLE_JIT", "0") in ("", "0")
except ImportError:  # pragma: no cover - exercised through the env flag
    _njit = None
    HAVE_NUMBA = False


def kernel(fn):
    """Compile ``fn`` with numba when available, else return it unchanged."""
    if _njit is None:
        return fn
    return _njit(cache=True, nogil=True)(fn)


def backend() -> str:
    return "numba" if HAVE_NUMBA else "numpy"

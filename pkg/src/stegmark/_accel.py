"""Numba acceleration switch.

Every hot kernel in :mod:`stegmark._kernels` exists twice: a loop version
compiled with ``numba.njit`` and a pure numpy (or pure Python, where the
algorithm is inherently sequential) fallback.  The fallback is selected when
numba is not importable or when ``STEGMARK_DISABLE_NUMBA`` is set to a
truthy value before import.
"""

import os

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

_flag = os.environ.get("STEGMARK_DISABLE_NUMBA", "").strip().lower()
USE_NUMBA = HAVE_NUMBA and _flag in ("", "0", "false", "no")


def njit(fn):
    """Compile ``fn`` in nopython mode when numba is present, else return it."""
    if not HAVE_NUMBA:
        return fn
    return numba.njit(cache=True, nogil=True)(fn)


def backend():
    return "numba" if USE_NUMBA else "numpy"

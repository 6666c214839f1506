"""JIT selection.

Hot loops are compiled with numba when it is importable and the
``MSSTEMG_DISABLE_NUMBA`` environment variable is unset (or ``0``).
Otherwise the pure-numpy implementations in :mod:`msstemg.kernels` are used.
The flag is read once at import time.
"""

import os

_FLAG = os.environ.get("MSSTEMG_DISABLE_NUMBA", "0").strip().lower()

try:
    import numba  # noqa: F401
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and _FLAG in ("", "0", "false", "no", "off")


def njit(fn):
    """``numba.njit(cache=True)`` or a passthrough when numba is unavailable."""
    if not HAVE_NUMBA:
        return fn
    from numba import njit as _njit
    return _njit(cache=True, nogil=True)(fn)


def backend():
    return "numba" if USE_NUMBA else "numpy"

"""Select between numba-compiled kernels and the pure-numpy fallback.

Set ``SENSORQC_NUMBA=0`` in the environment to force the numpy path. When
numba is not importable the numpy path is used regardless.
"""

import os

try:
    from numba import njit as _numba_njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is an optional extra
    HAVE_NUMBA = False
    _numba_njit = None


def _flag_enabled() -> bool:
    raw = os.environ.get("SENSORQC_NUMBA", "1").strip().lower()
    return raw not in ("0", "false", "no", "off", "")


USE_NUMBA = HAVE_NUMBA and _flag_enabled()


def njit(func):
    """``numba.njit(cache=True)`` when numba is installed, identity otherwise."""
    if _numba_njit is None:
        return func
    return _numba_njit(cache=True)(func)


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"

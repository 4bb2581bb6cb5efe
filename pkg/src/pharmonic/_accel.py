"""Optional numba acceleration.

Set ``PHARMONIC_DISABLE_NUMBA=1`` to force the pure-numpy code paths. The flag is
read once at import time.
"""
import os

_disabled = os.environ.get("PHARMONIC_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes", "on")

try:
    if _disabled:
        raise ImportError
    from numba import njit as _njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False
    _njit = None


def njit(*args, **kwargs):
    """``numba.njit`` when available, otherwise the identity decorator."""
    if HAVE_NUMBA:
        return _njit(*args, cache=True, **kwargs)

    def wrap(fn):
        return fn

    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return wrap


def backend() -> str:
    return "numba" if HAVE_NUMBA else "numpy"

"""Optional numba acceleration.

Hot kernels are written once as plain loops and compiled with ``njit`` when
numba is importable.  Setting ``CMCLAB_DISABLE_NUMBA=1`` forces the pure
numpy fallbacks, which is what the benchmark compares against.
"""

import os

_DISABLED = os.environ.get("CMCLAB_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes"}

try:
    if _DISABLED:
        raise ImportError
    from numba import njit as _njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - depends on environment
    _njit = None
    HAVE_NUMBA = False


def njit(*args, **kwargs):
    """``numba.njit`` with ``cache=True``, or a no-op decorator without numba."""
    if HAVE_NUMBA:
        kwargs.setdefault("cache", True)
        return _njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]

    def wrap(fn):
        return fn

    return wrap


def use_numba():
    return HAVE_NUMBA

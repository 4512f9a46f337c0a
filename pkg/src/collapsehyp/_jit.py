"""Optional numba acceleration.

Kernels are written once in the numba-compatible subset of numpy. Setting
``COLLAPSEHYP_DISABLE_JIT=1`` (or running without numba installed) turns
``njit`` into a no-op so the same functions run as plain numpy.
"""

import os

_DISABLED = os.environ.get("COLLAPSEHYP_DISABLE_JIT", "0").lower() in ("1", "true", "yes")

try:
    if _DISABLED:
        raise ImportError
    from numba import njit as _numba_njit

    JIT_ENABLED = True
except ImportError:  # pragma: no cover - exercised via the env flag
    _numba_njit = None
    JIT_ENABLED = False


def njit(func=None, **kwargs):
    if JIT_ENABLED:
        kwargs.setdefault("cache", True)
        if func is not None:
            return _numba_njit(**kwargs)(func)
        return _numba_njit(**kwargs)

    if func is not None:
        return func

    def wrapper(f):
        return f

    return wrapper

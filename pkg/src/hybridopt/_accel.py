"""Numba switch.

Set ``HYBRIDOPT_NUMBA=0`` to run every kernel through its pure Python/numpy
path. The flag is read once at import time.
"""

import os

try:
    import numba
    from numba.core.registry import CPUDispatcher
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    numba = None
    CPUDispatcher = ()

USE_NUMBA = numba is not None and os.environ.get("HYBRIDOPT_NUMBA", "1").lower() not in (
    "0", "false", "no", "off")


def jit(fn=None, **kwargs):
    """``numba.njit`` when enabled, identity otherwise.

    Module-level functions are cached on disk; closures built by factories
    cannot be, so they compile once per process.
    """
    def wrap(f):
        if USE_NUMBA:
            opts = {"cache": "<locals>" not in f.__qualname__, **kwargs}
            return numba.njit(**opts)(f)
        return f
    if fn is None:
        return wrap
    return wrap(fn)


def is_jitted(fn):
    return USE_NUMBA and isinstance(fn, CPUDispatcher)


def py(fn):
    """The interpreted body of a (possibly) jitted function."""
    return getattr(fn, "py_func", fn)

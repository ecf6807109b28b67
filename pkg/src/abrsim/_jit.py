"""JIT switch.

Kernels are written in the numba-compatible subset of Python.  Setting
``ABRSIM_PURE_PYTHON=1`` (or running without numba installed) turns every
``njit`` into a no-op so the same code runs as plain Python on numpy arrays.
"""
import os

_flag = os.environ.get("ABRSIM_PURE_PYTHON", "").strip().lower()
PURE_PYTHON = _flag not in ("", "0", "false", "no")

try:
    if PURE_PYTHON:
        raise ImportError
    import numba as _numba
except ImportError:
    _numba = None

JIT_ENABLED = _numba is not None


def njit(*args, **kwargs):
    if _numba is None:
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda func: func
    kwargs.setdefault("cache", True)
    kwargs.setdefault("nogil", True)
    if len(args) == 1 and callable(args[0]):
        return _numba.njit(**kwargs)(args[0])
    return _numba.njit(*args, **kwargs)

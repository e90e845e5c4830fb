"""Kernel compilation switch.

Kernels are written in the subset of Python that numba can compile.  When
numba is unavailable, or ``PROEXPLORE_DISABLE_NUMBA`` is set to a truthy
value, they run as ordinary Python functions over numpy arrays.
"""
from __future__ import annotations

import os

_FLAG = os.environ.get("PROEXPLORE_DISABLE_NUMBA", "").strip().lower()
DISABLED = _FLAG in ("1", "true", "yes", "on")

try:  # pragma: no cover - exercised implicitly
    import numba as _numba
except ImportError:  # pragma: no cover
    _numba = None

USE_NUMBA = _numba is not None and not DISABLED


def njit(fn=None, **options):
    """``numba.njit(cache=True)`` or a no-op, depending on the switch."""

    def wrap(f):
        if not USE_NUMBA:
            return f
        opts = {"cache": True, "nogil": True}
        opts.update(options)
        return _numba.njit(**opts)(f)

    if fn is None:
        return wrap
    return wrap(fn)


def py_func(kernel):
    """Return the uncompiled Python function behind a kernel."""
    return getattr(kernel, "py_func", kernel)

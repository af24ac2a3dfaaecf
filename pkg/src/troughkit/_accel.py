"""JIT infrastructure for the hot numeric kernels.

Every performance-critical inner loop in the package is written in
nopython-compatible style and decorated with :func:`njit` from this module.
When numba is installed (the default) the kernels are compiled and cached;
setting the environment variable ``TROUGHKIT_NO_NUMBA=1`` before import
selects the pure-Python/NumPy fallback path instead, which runs the very
same function bodies uncompiled.  ``benchmarks/bench_kernels.py`` compares
the two paths.
"""

import os

USE_NUMBA = os.environ.get("TROUGHKIT_NO_NUMBA", "").strip().lower() not in (
    "1",
    "true",
    "yes",
)

if USE_NUMBA:
    try:
        from numba import njit as _numba_njit
    except ImportError:  # pragma: no cover - numba is a hard dependency
        USE_NUMBA = False

if USE_NUMBA:

    def njit(*args, **kwargs):
        kwargs.setdefault("cache", True)
        if args and callable(args[0]):
            return _numba_njit(cache=kwargs["cache"])(args[0])
        return _numba_njit(*args, **kwargs)

else:

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(fn):
            return fn

        return wrap


def python_impl(fn):
    """Return the uncompiled Python implementation of a kernel.

    Used by the benchmark harness to time the fallback path without
    re-importing the package under a different environment.
    """
    return getattr(fn, "py_func", fn)

"""Backend switch for the hot kernels.

Kernels are written once as plain Python loops; when numba is importable and
``SURFACE_QBM_BACKEND`` is not ``numpy`` they are compiled with ``@njit``.
Otherwise each kernel module exposes a vectorised numpy implementation instead.
"""
import os

try:
    from numba import njit as _njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

BACKEND_ENV = "SURFACE_QBM_BACKEND"


def requested_backend():
    value = os.environ.get(BACKEND_ENV, "numba").strip().lower()
    if value not in ("numba", "numpy"):
        raise ValueError(f"{BACKEND_ENV} must be 'numba' or 'numpy', got {value!r}")
    return value


USE_NUMBA = HAVE_NUMBA and requested_backend() == "numba"


def njit(*args, **kwargs):
    """``numba.njit`` if available, identity decorator otherwise."""
    if HAVE_NUMBA:
        return _njit(*args, **kwargs)
    if args and callable(args[0]):
        return args[0]
    return lambda f: f

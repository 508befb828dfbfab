"""Backend switch for the hot numeric kernels.

Set ``PMP_BACKEND=numpy`` to run the vectorized pure-numpy path instead of the
numba-compiled loops.  The choice is read once at import time.
"""
import os

_requested = os.environ.get("PMP_BACKEND", "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    raise ValueError(f"PMP_BACKEND must be 'numba' or 'numpy', got {_requested!r}")

try:
    from numba import njit as _njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _njit = None
    HAVE_NUMBA = False

BACKEND = _requested if HAVE_NUMBA else "numpy"


def njit(*args, **kwargs):
    """``numba.njit`` with caching on; identity decorator when numba is missing."""
    kwargs.setdefault("cache", True)
    if not HAVE_NUMBA:
        if args and callable(args[0]):
            return args[0]
        return lambda f: f
    return _njit(*args, **kwargs)


def use_numba():
    return BACKEND == "numba"

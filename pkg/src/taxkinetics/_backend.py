"""Select between numba-compiled kernels and the pure-numpy fallback.

Set ``TAXKINETICS_DISABLE_NUMBA=1`` in the environment to force the numpy
path (useful for debugging and for the backend comparison benchmark).
"""
import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

HAVE_NUMBA = numba is not None
ENV_FLAG = "TAXKINETICS_DISABLE_NUMBA"


def numba_requested() -> bool:
    value = os.environ.get(ENV_FLAG, "").strip().lower()
    return HAVE_NUMBA and value in ("", "0", "false", "no")


def njit(*args, **kwargs):
    """``numba.njit`` when numba is importable, identity decorator otherwise."""
    if HAVE_NUMBA:
        return numba.njit(*args, **kwargs)
    if args and callable(args[0]):
        return args[0]
    return lambda f: f

"""Backend selection for the hot kernels.

Set ``DRIFTLAB_DISABLE_NUMBA=1`` to force the pure-numpy implementations.
Both backends draw from the same ``numpy.random.Generator`` in the same
order, so results are identical for a given seed.
"""
import os

_FALSY = {"", "0", "false", "no", "off"}

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

NUMBA_AVAILABLE = numba is not None
USE_NUMBA = NUMBA_AVAILABLE and (
    os.environ.get("DRIFTLAB_DISABLE_NUMBA", "0").strip().lower() in _FALSY
)


def njit(fn=None, **kwargs):
    """``numba.njit`` with caching on, or the identity when numba is absent."""
    kwargs.setdefault("cache", True)
    kwargs.setdefault("nogil", True)

    def wrap(f):
        if not NUMBA_AVAILABLE:
            return f
        return numba.njit(**kwargs)(f)

    if fn is None:
        return wrap
    return wrap(fn)


def backend_name():
    return "numba" if USE_NUMBA else "numpy"

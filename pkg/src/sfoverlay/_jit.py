"""Numba switch for the hot kernels.

Kernels are written once as plain Python over numpy arrays.  When numba is
importable and ``SFOVERLAY_DISABLE_NUMBA`` is unset (or "0"), they are
compiled with ``numba.njit``; otherwise the same source runs interpreted.

Randomness inside kernels goes through :func:`seed`, :func:`uniform` and
:func:`randbelow`.  Compiled kernels use numba's internal Mersenne Twister,
the fallback uses a private ``RandomState``; both produce the same stream
for the same seed, so the two paths generate identical graphs.
"""
import os

import numpy as np

_DISABLED = os.environ.get("SFOVERLAY_DISABLE_NUMBA", "0").strip().lower() not in ("", "0", "false", "no")

try:
    if _DISABLED:
        raise ImportError
    import numba

    USE_NUMBA = True
except ImportError:
    numba = None
    USE_NUMBA = False


def jit(func):
    if USE_NUMBA:
        return numba.njit(cache=True)(func)
    return func


if USE_NUMBA:

    @jit
    def seed(s):
        np.random.seed(s)

    @jit
    def uniform():
        return np.random.random()

else:
    _state = np.random.RandomState()

    def seed(s):
        _state.seed(s)

    def uniform():
        return _state.random_sample()


@jit
def randbelow(n):
    # float scaling instead of np.random.randint keeps both paths on one stream
    return int(uniform() * n)


def backend():
    return "numba" if USE_NUMBA else "python"

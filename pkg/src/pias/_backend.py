"""Kernel backend selection.

Hot kernels ship in two flavors: a numba @njit build and a vectorized
numpy build.  The active flavor is chosen once at import time from the
PIAS_BACKEND environment variable:

    auto   use numba when importable, numpy otherwise (default)
    numba  require numba, fail loudly if missing
    numpy  force the pure-numpy path
"""

import os

_choice = os.environ.get("PIAS_BACKEND", "auto").strip().lower()
if _choice not in ("auto", "numba", "numpy"):
    raise RuntimeError(
        f"PIAS_BACKEND must be one of auto/numba/numpy, got {_choice!r}"
    )

if _choice == "numpy":
    HAVE_NUMBA = False
else:
    try:
        from numba import njit  # noqa: F401
        HAVE_NUMBA = True
    except ImportError:
        if _choice == "numba":
            raise
        HAVE_NUMBA = False

USING_NUMBA = HAVE_NUMBA and _choice in ("auto", "numba")

if HAVE_NUMBA:
    from numba import njit as _njit

    def jit(fn):
        # cache=True persists compiled kernels across processes; no
        # fastmath so both backends agree bit-for-bit on reductions.
        return _njit(cache=True)(fn)
else:
    def jit(fn):
        return fn


def backend_name() -> str:
    return "numba" if USING_NUMBA else "numpy"

"""Numba switch.

Set ``TFIM_MAGIC_DISABLE_NUMBA=1`` to force the pure-numpy kernels. The flag is
read once at import time; numba is also skipped silently when it is not
importable.
"""

import os

_DISABLED = os.environ.get("TFIM_MAGIC_DISABLE_NUMBA", "").strip().lower() in (
    "1",
    "true",
    "yes",
    "on",
)

try:
    if _DISABLED:
        raise ImportError("disabled by TFIM_MAGIC_DISABLE_NUMBA")
    import numba

    # The bundled TBB is too old for numba; skip probing it.
    if "NUMBA_THREADING_LAYER" not in os.environ:
        numba.config.THREADING_LAYER = "workqueue"
    NUMBA_ENABLED = True
    njit = numba.njit
    prange = numba.prange
except ImportError:
    numba = None
    NUMBA_ENABLED = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f

    prange = range


def backend_name() -> str:
    return "numba" if NUMBA_ENABLED else "numpy"


def set_threads(n):
    """Size numba's worker pool; a no-op on the numpy path."""
    if NUMBA_ENABLED and n:
        numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))

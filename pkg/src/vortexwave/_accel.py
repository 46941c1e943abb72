"""Backend switch for the hot loops.

Set ``VORTEXWAVE_NUMBA=0`` (or ``false``/``off``) before import to force the
pure-numpy path. When numba is missing the numpy path is used automatically.
"""

import os
import warnings

_flag = os.environ.get("VORTEXWAVE_NUMBA", "1").strip().lower()
_requested = _flag not in ("0", "false", "off", "no")

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    if _requested:
        warnings.warn("numba not importable; using the numpy fallback", RuntimeWarning)

HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and _requested


def njit(*args, **kwargs):
    """``numba.njit`` when available, identity otherwise."""
    if HAVE_NUMBA:
        return numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda f: f


def set_threads(n):
    if HAVE_NUMBA and n:
        numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))


def backend_name():
    return "numba" if USE_NUMBA else "numpy"

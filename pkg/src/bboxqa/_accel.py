"""numba availability and backend selection.

The numba kernels are used when numba imports and ``BBOXQA_DISABLE_NUMBA`` is
unset (or ``0``). Setting the variable to ``1`` selects the pure-numpy
kernels; the flag is read on every dispatch, so it can be flipped at runtime.
"""

import os
import warnings

DISABLE_ENV = "BBOXQA_DISABLE_NUMBA"

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None
    HAVE_NUMBA = False


def njit(*args, **kwargs):
    """``numba.njit`` with caching, or an identity decorator without numba."""
    if HAVE_NUMBA:
        kwargs.setdefault("cache", True)
        return numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda func: func


def numba_enabled() -> bool:
    flag = os.environ.get(DISABLE_ENV, "").strip().lower()
    if flag not in ("", "0", "false", "no"):
        return False
    if not HAVE_NUMBA:
        warnings.warn("numba is not installed; using the slower numpy kernels", RuntimeWarning, stacklevel=3)
    return HAVE_NUMBA


def backend() -> str:
    return "numba" if numba_enabled() else "numpy"

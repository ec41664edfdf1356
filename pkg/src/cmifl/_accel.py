"""Backend selection for the numeric kernels.

Numba is used when it imports cleanly and ``CMIFL_DISABLE_NUMBA`` is unset
(or set to ``0``).  Otherwise every kernel runs its pure-numpy twin.  Both
paths compute the same quantities in the same order, so the choice affects
speed only.
"""

import os

_flag = os.environ.get("CMIFL_DISABLE_NUMBA", "").strip().lower()
DISABLED_BY_ENV = _flag not in ("", "0", "false", "no")

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not DISABLED_BY_ENV


def njit(*args, **kwargs):
    """``numba.njit`` when available, otherwise the identity decorator."""
    if HAVE_NUMBA:
        kwargs.setdefault("cache", True)
        return numba.njit(*args, **kwargs)

    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]

    def _wrap(func):
        return func

    return _wrap


def backend_name():
    return "numba" if USE_NUMBA else "numpy"

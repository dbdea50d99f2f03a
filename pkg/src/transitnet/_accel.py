"""Backend switch for the numeric kernels.

Set ``TRANSITNET_NUMBA=0`` to force the pure-numpy path even when numba is
importable. The flag is read once at import time.
"""
import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is a hard dependency in CI
    numba = None

_OFF = {"0", "false", "no", "off", "numpy"}

NUMBA_AVAILABLE = numba is not None
NUMBA_ENABLED = NUMBA_AVAILABLE and os.environ.get("TRANSITNET_NUMBA", "1").strip().lower() not in _OFF

njit_kwargs = {
    "cache": True,
    "nogil": True,
    # fastmath would reorder reductions and break bit reproducibility
    "fastmath": False,
}


def maybe_njit(fn):
    """Return a lazily compiled numba dispatcher for ``fn``, or None without numba."""
    if not NUMBA_AVAILABLE:
        return None
    return numba.njit(**njit_kwargs)(fn)


def backend():
    return "numba" if NUMBA_ENABLED else "numpy"

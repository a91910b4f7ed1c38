"""Backend switch for the hot numeric kernels.

Set ``SSCC_DISABLE_NUMBA=1`` to force the pure-numpy kernels. Numba is also
skipped silently when it cannot be imported.
"""
import os

_FALSY = {"", "0", "false", "no", "off"}


def numba_requested() -> bool:
    return os.environ.get("SSCC_DISABLE_NUMBA", "").strip().lower() in _FALSY


try:
    import numba  # noqa: F401

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba ships with the package deps
    HAS_NUMBA = False

USE_NUMBA = HAS_NUMBA and numba_requested()
BACKEND = "numba" if USE_NUMBA else "numpy"

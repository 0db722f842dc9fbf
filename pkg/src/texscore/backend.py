"""Kernel backend selection and thread-count resolution.

The hot inner loops (GLCM pair counting, CART split scans, tree traversal)
exist in two variants: a numba ``@njit`` kernel and a pure-numpy fallback.
Setting the environment variable ``TEXSCORE_NO_NUMBA`` to anything other
than ``0`` or the empty string forces the numpy path; the numpy path is
also used automatically when numba is not importable.

``benchmarks/bench_backends.py`` times the two variants against each other.
"""

from __future__ import annotations

import os

_flag = os.environ.get("TEXSCORE_NO_NUMBA", "").strip()
NUMBA_SUPPRESSED = _flag not in ("", "0")

try:
    from numba import njit  # noqa: F401

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only on numba-less installs
    HAVE_NUMBA = False

#: Module-level switch consulted on every kernel dispatch.  Tests flip this
#: to exercise both paths in one process.
USE_NUMBA = HAVE_NUMBA and not NUMBA_SUPPRESSED


def use_numba() -> bool:
    """True when jitted kernels should be dispatched."""
    return USE_NUMBA


def active_backend() -> str:
    return "numba" if USE_NUMBA else "numpy"


def resolve_threads(requested: int | None = None) -> int:
    """Worker cap for batch operations.

    Precedence: explicit argument > ``TEXSCORE_THREADS`` env var > 1.
    """
    if requested is not None:
        if requested < 1:
            raise ValueError(f"thread count must be >= 1, got {requested}")
        return requested
    env = os.environ.get("TEXSCORE_THREADS", "").strip()
    if env:
        try:
            value = int(env)
        except ValueError as exc:
            raise ValueError(f"TEXSCORE_THREADS is not an integer: {env!r}") from exc
        if value < 1:
            raise ValueError(f"TEXSCORE_THREADS must be >= 1, got {value}")
        return value
    return 1

"""Backend selection for the hot kernels.

``SESDEMAND_BACKEND`` picks the default implementation of the batch kernels:
``numba`` (JIT-compiled loops, the default when numba imports) or ``numpy``
(vectorised across paths/replications, no compilation).  Both backends
consume identical random streams, so they return the same integers.
"""

from __future__ import annotations

import os

try:
    import numba

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is optional
    numba = None
    NUMBA_AVAILABLE = False

BACKENDS = ("numba", "numpy")


def _default_backend() -> str:
    requested = os.environ.get("SESDEMAND_BACKEND", "").strip().lower()
    if requested and requested not in BACKENDS:
        raise ValueError(f"SESDEMAND_BACKEND must be one of {BACKENDS}, got {requested!r}")
    if requested == "numpy" or not NUMBA_AVAILABLE:
        return "numpy"
    return "numba"


DEFAULT_BACKEND = _default_backend()


def resolve_backend(backend: str | None) -> str:
    if backend is None:
        return DEFAULT_BACKEND
    backend = backend.lower()
    if backend not in BACKENDS:
        raise ValueError(f"unknown backend {backend!r}")
    if backend == "numba" and not NUMBA_AVAILABLE:
        raise RuntimeError("numba backend requested but numba is not installed")
    return backend


def njit(*args, **kwargs):
    """``numba.njit(cache=True, nogil=True)`` or a no-op without numba."""
    if not NUMBA_AVAILABLE:
        if args and callable(args[0]):
            return args[0]
        return lambda fn: fn
    kwargs.setdefault("cache", True)
    kwargs.setdefault("nogil", True)
    return numba.njit(*args, **kwargs)


def default_workers() -> int:
    """Worker count from ``SESDEMAND_WORKERS`` (default 1)."""
    raw = os.environ.get("SESDEMAND_WORKERS", "1")
    try:
        workers = int(raw)
    except ValueError:
        raise ValueError(f"SESDEMAND_WORKERS must be an integer, got {raw!r}") from None
    return max(1, workers)

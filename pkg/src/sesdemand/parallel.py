"""Chunked thread-pool map used by the batch APIs.

The numba kernels release the GIL, so threads give real parallelism.  Output
order never depends on scheduling: chunks are reassembled by index.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from ._accel import default_workers


def chunk_bounds(n: int, chunks: int) -> list[tuple[int, int]]:
    chunks = max(1, min(chunks, n))
    edges = np.linspace(0, n, chunks + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def map_chunks(fn, n: int, workers: int | None = None) -> list:
    """Call ``fn(start, stop)`` over a partition of ``range(n)``; results in order."""
    workers = default_workers() if workers is None else max(1, int(workers))
    bounds = chunk_bounds(n, workers)
    if workers == 1 or len(bounds) == 1:
        return [fn(a, b) for a, b in bounds]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda ab: fn(*ab), bounds))

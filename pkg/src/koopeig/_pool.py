"""Chunked parallel map over point batches.

Work is split into fixed-size chunks regardless of worker count, and chunk
results are reassembled in order, so output is bitwise independent of the
number of workers.
"""

from __future__ import annotations

import multiprocessing
import os
from typing import Callable

__all__ = ["map_chunked", "default_workers"]

_worker_fn = None
_worker_ctx = None


def default_workers() -> int:
    return os.cpu_count() or 1


def _init(fn, ctx):
    global _worker_fn, _worker_ctx
    _worker_fn = fn
    _worker_ctx = ctx


def _run(chunk):
    return _worker_fn(_worker_ctx, chunk)


def map_chunked(fn: Callable, ctx, points, workers: int = 1, chunk: int = 512):
    """Apply fn(ctx, chunk_of_points) to consecutive chunks; return list of results."""
    chunks = [points[i : i + chunk] for i in range(0, len(points), chunk)]
    if workers is None:
        workers = default_workers()
    if workers <= 1 or len(chunks) <= 1:
        return [fn(ctx, c) for c in chunks]
    with multiprocessing.Pool(
        processes=min(workers, len(chunks)), initializer=_init, initargs=(fn, ctx)
    ) as pool:
        return pool.map(_run, chunks)

"""Deterministic chunked fan-out for pointwise evaluations.

Chunk boundaries depend only on the input size, never on the worker count, so
results are bitwise identical for any ``STRAYMAG_THREADS`` setting.
"""

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

CHUNK = 2048


def thread_count(threads=None):
    """Resolve a worker count; ``None`` reads ``STRAYMAG_THREADS`` (0 = auto)."""
    if threads is None:
        try:
            threads = int(os.environ.get("STRAYMAG_THREADS", "0"))
        except ValueError:
            threads = 0
    if threads <= 0:
        threads = os.cpu_count() or 1
    return threads


def map_rows(fn, rows, threads=None, chunk=CHUNK):
    """Apply ``fn`` to fixed-size row chunks of ``rows`` and concatenate."""
    rows = np.asarray(rows)
    n = len(rows)
    if n == 0:
        return fn(rows)
    bounds = [(i, min(i + chunk, n)) for i in range(0, n, chunk)]
    workers = min(thread_count(threads), len(bounds))
    if workers <= 1:
        parts = [fn(rows[lo:hi]) for lo, hi in bounds]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda b: fn(rows[b[0]:b[1]]), bounds))
    return np.concatenate(parts, axis=0)

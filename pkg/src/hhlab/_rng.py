"""Counter-style random streams keyed by (seed, block index).

Samples are processed in fixed-size blocks; block ``k`` always draws from the
Philox stream spawned with key ``(seed, k)``. Results therefore depend only on
the seed and the sample count, never on how many workers ran the blocks.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

BLOCK_SIZE = 4096


def block_generator(seed: int, block: int, stream: int = 0) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(stream), int(block)))
    return np.random.Generator(np.random.Philox(ss))


def worker_count() -> int:
    env = os.environ.get("HHLAB_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return min(8, os.cpu_count() or 1)


def block_slices(n: int, block_size: int = BLOCK_SIZE):
    return [(k, k * block_size, min(n, (k + 1) * block_size))
            for k in range((n + block_size - 1) // block_size)]


def map_blocks(func, n: int, seed: int, stream: int = 0, block_size: int = BLOCK_SIZE,
               workers: int | None = None):
    """Run ``func(rng, start, stop)`` over sample blocks; results in block order."""
    jobs = block_slices(n, block_size)

    def run(job):
        k, start, stop = job
        return func(block_generator(seed, k, stream), start, stop)

    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(jobs) <= 1:
        return [run(j) for j in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, jobs))


def pairwise_sum(values):
    """Fixed-order tree reduction (bitwise reproducible); scalars or equal-shape arrays."""
    vals = [np.asarray(v, float) for v in values]
    if not vals:
        return 0.0
    while len(vals) > 1:
        nxt = [vals[i] + vals[i + 1] for i in range(0, len(vals) - 1, 2)]
        if len(vals) % 2:
            nxt.append(vals[-1])
        vals = nxt
    return float(vals[0]) if vals[0].ndim == 0 else vals[0]

"""Block-parallel Monte Carlo with deterministic merging."""

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, TypeVar

import numpy as np

from .rng import make_rng

T = TypeVar("T")


def thread_count() -> int:
    env = os.environ.get("URNFLOW_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def block_sizes(total: int, block: int) -> list[int]:
    sizes = [block] * (total // block)
    if total % block:
        sizes.append(total % block)
    return sizes


def map_blocks(fn: Callable[[np.random.Generator, int], T], total: int, seed: int,
               block: int = 200_000) -> list[T]:
    """Run ``fn(rng_i, size_i)`` over fixed-size blocks; results come back in block order.

    Block ``i`` always uses stream ``i`` of ``seed``, so the merged result does
    not depend on ``URNFLOW_THREADS``.
    """
    sizes = block_sizes(total, block)
    jobs = [(make_rng(seed, i), s) for i, s in enumerate(sizes)]
    workers = min(thread_count(), len(jobs)) or 1
    if workers == 1:
        return [fn(r, s) for r, s in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda job: fn(*job), jobs))

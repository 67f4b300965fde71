"""Deterministic fan-out of independent seeded tasks."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence, TypeVar

T = TypeVar("T")


def worker_count(tasks: int) -> int:
    env = os.environ.get("DISTILLKIT_THREADS")
    cap = os.cpu_count() or 1
    if env:
        try:
            cap = max(1, int(env))
        except ValueError:
            raise ValueError(f"DISTILLKIT_THREADS must be an integer, got {env!r}") from None
    return max(1, min(cap, tasks))


def run_indexed(fn: Callable[[int], T], count: int) -> list[T]:
    """Evaluate fn(0..count-1); results keep index order regardless of scheduling."""
    workers = worker_count(count)
    if workers == 1:
        return [fn(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(count)))


def rng_for(seed: int, index: int):
    import numpy as np

    return np.random.default_rng([int(seed), int(index)])


def best_index(values: Sequence[float]) -> int:
    """Index of the maximum, ties going to the lowest index."""
    best = 0
    for i, v in enumerate(values):
        if v > values[best]:
            best = i
    return best

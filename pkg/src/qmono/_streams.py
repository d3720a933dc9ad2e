"""Seeded random streams and a deterministic thread map.

Streams are keyed by work-item index, never by thread, so any thread
count reproduces the same numbers bit for bit.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

import numpy as np

T = TypeVar("T")
R = TypeVar("R")

DEFAULT_CHUNK = 10_000


def stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key)))


def chunk_generators(seed: int, samples: int, chunk: int = DEFAULT_CHUNK):
    """Split ``samples`` into fixed-size chunks, each with its own stream."""
    out = []
    start = 0
    k = 0
    while start < samples:
        n = min(chunk, samples - start)
        out.append((n, stream(seed, 1, k)))
        start += n
        k += 1
    return out


def parallel_map(fn: Callable[[T], R], items: Iterable[T], threads: int = 1) -> list[R]:
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))

"""Deterministic ordered parallel map."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def resolve_threads(threads: int | None) -> int:
    if threads is None:
        threads = int(os.environ.get("SPIKELAB_THREADS", "1") or 1)
    return max(1, int(threads))


def ordered_map(fn: Callable[[T], R], items: Iterable[T], threads: int | None = 1) -> list[R]:
    """``[fn(x) for x in items]``; with threads > 1 the work is spread over a
    pool but results always come back in input order."""
    items = list(items)
    n = resolve_threads(threads)
    if n == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=min(n, len(items))) as pool:
        return list(pool.map(fn, items))


def chunks(n: int, size: int) -> list[tuple[int, int]]:
    return [(a, min(a + size, n)) for a in range(0, n, size)]

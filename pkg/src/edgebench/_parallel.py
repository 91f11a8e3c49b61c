"""Order-preserving parallel map capped by ``EDGEBENCH_THREADS``."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

T = TypeVar("T")
R = TypeVar("R")

ENV_VAR = "EDGEBENCH_THREADS"


def worker_count() -> int:
    """Worker cap from ``EDGEBENCH_THREADS``; 0, unset or garbage means CPU count."""
    raw = os.environ.get(ENV_VAR, "").strip()
    try:
        n = int(raw) if raw else 0
    except ValueError:
        n = 0
    if n <= 0:
        n = os.cpu_count() or 1
    return n


def ordered_map(fn: Callable[[T], R], items: Iterable[T]) -> list[R]:
    """``[fn(x) for x in items]``, evaluated on up to :func:`worker_count` threads."""
    items = list(items)
    n = min(worker_count(), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))

"""Deterministic reductions and an order-preserving parallel map."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Sequence, TypeVar

import numpy as np

T = TypeVar("T")
R = TypeVar("R")


def thread_cap() -> int:
    """Worker count from ``NZL_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("NZL_THREADS", "1")))
    except ValueError:
        return 1


def pairwise_sum(values, axis: int = 0):
    """Tree reduction along ``axis`` with a fixed pairing order.

    The result depends only on the data, never on scheduling, so repeated
    runs are bit-identical.
    """
    a = np.asarray(values)
    a = np.moveaxis(a, axis, 0)
    if a.shape[0] == 0:
        return np.zeros(a.shape[1:], dtype=a.dtype)[()]
    while a.shape[0] > 1:
        if a.shape[0] % 2:
            head = a[:-1]
            tail = a[-1:]
            a = np.concatenate([head[0::2] + head[1::2], tail], axis=0)
        else:
            a = a[0::2] + a[1::2]
    return a[0]


def ordered_map(fn: Callable[[T], R], items: Iterable[T], workers: int | None = None) -> List[R]:
    items = list(items)
    workers = thread_cap() if workers is None else workers
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def chunks(seq: Sequence[T], size: int) -> List[Sequence[T]]:
    return [seq[i:i + size] for i in range(0, len(seq), size)]

"""Bounded worker pools whose results come back in submission order."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor, ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def ordered_map(
    fn: Callable[[T], R], items: Iterable[T], workers: int = 1, processes: bool = False
) -> list[R]:
    """``[fn(x) for x in items]`` evaluated on up to ``workers`` workers.

    Output order is the input order regardless of completion order. Process
    pools require ``fn`` and the items to be picklable.
    """
    if workers < 1:
        raise ValueError(f"worker count must be >= 1, got {workers}")
    items = list(items)
    if workers == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    pool_cls = ProcessPoolExecutor if processes else ThreadPoolExecutor
    with pool_cls(max_workers=workers) as pool:
        return list(pool.map(fn, items))

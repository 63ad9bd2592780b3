from __future__ import annotations

import concurrent.futures
import logging
from typing import Callable, Iterable, List, TypeVar

logger = logging.getLogger("phyloinv.parallel")

T = TypeVar("T")
R = TypeVar("R")


def parallel_map(fn: Callable[[T], R], items: Iterable[T], threads: int = 1) -> List[R]:
    """Order-preserving map; a thread pool is used only when ``threads > 1``."""
    work = list(items)
    if threads <= 1 or len(work) <= 1:
        return [fn(x) for x in work]
    workers = min(threads, len(work))
    logger.debug("parallel_map items=%s workers=%s", len(work), workers)
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, work))

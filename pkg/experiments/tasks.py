"""
Work fan-out for experiment runs
Independent (q, r, n) items go to a thread pool; results come back in
submission order so every export is deterministic
"""
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, TypeVar

logger = logging.getLogger(__name__)

T = TypeVar('T')
R = TypeVar('R')


class TaskRunner:
    """
    Ordered map over a worker pool; threads=1 runs inline
    """

    def __init__(self, threads: int = 1):
        self.threads = max(1, int(threads))

    def map(self, fn: Callable[[T], R], items: Iterable[T]) -> List[R]:
        items = list(items)
        start_time = time.time()
        if self.threads == 1 or len(items) < 2:
            results = [fn(item) for item in items]
        else:
            with ThreadPoolExecutor(max_workers=self.threads, thread_name_prefix='quantdim') as pool:
                results = list(pool.map(fn, items))
        elapsed = (time.time() - start_time) * 1000
        logger.debug(f"Gathered {len(items)} work items on {self.threads} thread(s) in {elapsed:.1f}ms")
        return results

    __call__ = map

"""
Bounded executor for independent simulation trials.
"""

import threading
from concurrent.futures import Future, ThreadPoolExecutor
from typing import Any, Callable, Iterable, List, Optional


class TrialExecutor:
    """
    A ThreadPoolExecutor wrapper that caps how many trials run at once.

    Every trial owns its own Simulator, so trials never share state and
    results only depend on their inputs, never on scheduling.
    """

    def __init__(self, max_workers: int = 4, max_concurrent: Optional[int] = None):
        """
        Args:
            max_workers: Maximum number of threads in the pool
            max_concurrent: Maximum number of trials running at once (defaults to max_workers)
        """
        self.max_workers = max(1, max_workers)
        self.max_concurrent = max_concurrent or self.max_workers
        self.executor = ThreadPoolExecutor(max_workers=self.max_workers)
        self.semaphore = threading.Semaphore(self.max_concurrent)

    def submit(self, fn: Callable, *args, **kwargs) -> Future:
        def bounded():
            with self.semaphore:
                return fn(*args, **kwargs)

        return self.executor.submit(bounded)

    def map_ordered(self, fn: Callable, items: Iterable, timeout: Optional[float] = None) -> List[Any]:
        """
        Run ``fn`` over ``items`` and return results in input order.

        A failing trial yields its exception in place of a result; callers
        decide whether to raise it.
        """
        futures = [self.submit(fn, item) for item in items]
        results = []
        for future in futures:
            try:
                results.append(future.result(timeout=timeout))
            except Exception as e:
                results.append(e)
        return results

    def shutdown(self, wait: bool = True) -> None:
        self.executor.shutdown(wait=wait)

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.shutdown()

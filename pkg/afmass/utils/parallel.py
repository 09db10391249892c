"""Ordered map over a thread pool.

numpy releases the GIL inside its kernels, so per-radius work overlaps well
in threads. Results always come back in input order.
"""

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar

from afmass import settings

T = TypeVar("T")
R = TypeVar("R")


def ordered_map(
    func: Callable[[T], R],
    items: Iterable[T],
    threads: Optional[int] = None,
) -> List[R]:
    """Applies func to every item, using `threads` workers when > 1.

    Args:
        func (Callable): Function of one item.
        items (Iterable): Work items.
        threads (int): Worker count, defaults to settings.THREADS.

    Returns:
        List: Results in the order of `items`.
    """
    items = list(items)
    threads = settings.THREADS if threads is None else threads
    if threads <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(threads, len(items))) as pool:
        return list(pool.map(func, items))

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, TypeVar

_T = TypeVar("_T")
_R = TypeVar("_R")


def ordered_map(fn: Callable[[_T], _R], items: Iterable[_T], workers: int = 1) -> List[_R]:
    """Map ``fn`` over ``items`` with up to ``workers`` threads, results in input order.

    LAPACK releases the GIL, so threads overlap the eigen/factorization work. The
    caller reduces the returned list sequentially, which keeps every summation order
    independent of ``workers``.
    """
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))

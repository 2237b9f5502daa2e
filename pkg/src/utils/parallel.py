"""
Chunked worker pool for per-point stages

Work is split into contiguous index blocks whose boundaries depend only on the
problem size, never on the number of workers, so every block is computed the
same way whatever the pool size. Results come back in block order.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, TypeVar

logger = logging.getLogger(__name__)

T = TypeVar("T")

BLOCK_SIZE = 256


def index_blocks(n: int, block_size: int = BLOCK_SIZE) -> list[range]:
    """Contiguous ranges covering 0..n-1"""
    return [range(start, min(start + block_size, n)) for start in range(0, n, block_size)]


def map_blocks(
    func: Callable[[range], T],
    n: int,
    n_threads: int = 1,
    block_size: int = BLOCK_SIZE
) -> list[T]:
    """
    Apply ``func`` to every index block

    Args:
        func: Callable taking a range of point indices
        n: Number of points
        n_threads: Worker threads (1 runs inline)
        block_size: Points per block

    Returns:
        Results in block order
    """
    blocks = index_blocks(n, block_size)
    if n_threads <= 1 or len(blocks) <= 1:
        return [func(block) for block in blocks]
    with ThreadPoolExecutor(max_workers=n_threads) as pool:
        return list(pool.map(func, blocks))

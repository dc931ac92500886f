"""
Task submission helpers.

Computational modules never own a pool: they receive a ``map``-like callable
from the harness and split their work into fixed-size batches, so results do
not depend on how many workers run them.
"""

from typing import Any, Callable, Iterable, Iterator, List, Optional, Tuple

Mapper = Callable[..., Iterable[Any]]

DEFAULT_BATCH_SIZE = 1024


def batch_ranges(n_items: int, batch_size: int = DEFAULT_BATCH_SIZE) -> List[Tuple[int, int]]:
    """
    Split [0, n_items) into consecutive half-open ranges.

    Args:
        n_items: Number of items
        batch_size: Maximum items per batch

    Returns:
        List of (start, stop) pairs in order
    """
    if batch_size <= 0:
        raise ValueError("batch_size must be positive")
    return [(start, min(start + batch_size, n_items)) for start in range(0, n_items, batch_size)]


def run_batches(task: Callable[[Tuple[int, int]], Any], n_items: int,
                mapper: Optional[Mapper] = None,
                batch_size: int = DEFAULT_BATCH_SIZE) -> List[Any]:
    """
    Run a task over all batches and return results in batch order.

    Args:
        task: Callable receiving a (start, stop) range
        n_items: Number of items to cover
        mapper: map-like callable; builtin map when None
        batch_size: Maximum items per batch

    Returns:
        List of task results, one per batch, ordered by start index
    """
    use_map = mapper if mapper is not None else map
    results: Iterator[Any] = iter(use_map(task, batch_ranges(n_items, batch_size)))
    return list(results)

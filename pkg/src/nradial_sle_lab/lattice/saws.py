"""
Exhaustive enumeration of self-avoiding walks inside a lattice domain.

Walks are produced depth first with moves tried in E, N, W, S order, so the
output is lexicographic in the move sequence and does not depend on how the
first-move branches are scheduled.
"""

from dataclasses import dataclass
from typing import FrozenSet, List, Optional, Sequence, Tuple

from loguru import logger

from ..utils.parallel import Mapper
from .domain import LatticeDomain, Site, neighbours

DEFAULT_BUDGET = 2_000_000


class EnumerationBudgetExceeded(RuntimeError):
    """Raised when an enumeration produces more items than its budget."""

    def __init__(self, count: int, partial):
        super().__init__(f"Enumeration budget exceeded after {count} items")
        self.count = count
        self.partial = partial


@dataclass(frozen=True)
class Saw:
    """A self-avoiding nearest-neighbour walk."""
    vertices: Tuple[Site, ...]

    def __post_init__(self) -> None:
        """Check adjacency and self-avoidance."""
        path = tuple(tuple(v) for v in self.vertices)
        if not path:
            raise ValueError("vertices must not be empty")
        if len(set(path)) != len(path):
            raise ValueError("vertices: walk revisits a site")
        for u, v in zip(path, path[1:]):
            if abs(u[0] - v[0]) + abs(u[1] - v[1]) != 1:
                raise ValueError(f"vertices: {u} and {v} are not adjacent")
        object.__setattr__(self, "vertices", path)

    @property
    def length(self) -> int:
        """|eta|, the number of edges."""
        return len(self.vertices) - 1

    @property
    def start(self) -> Site:
        return self.vertices[0]

    @property
    def end(self) -> Site:
        return self.vertices[-1]

    @property
    def vertex_set(self) -> FrozenSet[Site]:
        return frozenset(self.vertices)


@dataclass(frozen=True)
class SawTuple:
    """n walks sharing a common endpoint."""
    walks: Tuple[Saw, ...]

    @property
    def n(self) -> int:
        return len(self.walks)

    @property
    def length(self) -> int:
        """Total edge count of the tuple."""
        return sum(w.length for w in self.walks)

    @property
    def vertex_set(self) -> FrozenSet[Site]:
        """Union of the walks' vertices."""
        return frozenset().union(*(w.vertex_set for w in self.walks))

    @property
    def indicator(self) -> int:
        """1 when the walks meet nowhere except their common terminal point."""
        for i, first in enumerate(self.walks):
            for second in self.walks[i + 1:]:
                if first.end != second.end:
                    return 0
                if (first.vertex_set & second.vertex_set) - {first.end}:
                    return 0
        return 1


def _extend(domain: LatticeDomain, path: List[Site], visited: set, target: Site,
            cap: Optional[int], budget: int, found: List[Saw]) -> None:
    head = path[-1]
    if head == target:
        found.append(Saw(tuple(path)))
        if len(found) > budget:
            raise EnumerationBudgetExceeded(len(found), found)
        return
    if cap is not None and len(path) - 1 >= cap:
        return
    for step in neighbours(head):
        if step in domain and step not in visited:
            path.append(step)
            visited.add(step)
            _extend(domain, path, visited, target, cap, budget, found)
            visited.discard(step)
            path.pop()


def _branch(domain: LatticeDomain, start: Site, first: Site, target: Site,
            cap: Optional[int], budget: int) -> List[Saw]:
    found: List[Saw] = []
    _extend(domain, [start, first], {start, first}, target, cap, budget, found)
    return found


def enumerate_saws(domain: LatticeDomain, start: Site, target: Site, cap: Optional[int] = None,
                   budget: int = DEFAULT_BUDGET, allow_trivial: bool = True,
                   mapper: Optional[Mapper] = None) -> List[Saw]:
    """
    All self-avoiding walks in A from start to target.

    Args:
        domain: Domain A
        start: First vertex
        target: Last vertex; the walk stops on reaching it
        cap: Maximum number of edges (None for no cap)
        budget: Maximum number of walks before giving up
        allow_trivial: Whether start == target yields the zero-length walk
        mapper: map-like callable over the first-move branches

    Returns:
        Walks in lexicographic order of their move sequences

    Raises:
        ValueError: If start or target lies outside A or start is an interior site
        EnumerationBudgetExceeded: If more than budget walks exist
    """
    start, target = tuple(start), tuple(target)
    for label, site in (("start", start), ("target", target)):
        if site not in domain:
            raise ValueError(f"{label} {site} is not in the domain")
    if start not in set(domain.boundary_sites()):
        raise ValueError(f"start {start} is not a boundary site of {domain.name}")
    if cap is not None and cap < 0:
        raise ValueError(f"cap must be >= 0, got {cap}")

    if start == target:
        return [Saw((start,))] if allow_trivial else []
    if cap == 0:
        return []

    branches = [s for s in neighbours(start) if s in domain]
    use_map = mapper if mapper is not None else map
    walks: List[Saw] = []
    for found in use_map(lambda first: _branch(domain, start, first, target, cap, budget), branches):
        walks.extend(found)
        if len(walks) > budget:
            raise EnumerationBudgetExceeded(len(walks), walks)
    logger.debug(f"Enumerated {len(walks)} walks from {start} to {target} in {domain.name}")
    return walks


def disjoint_tuples(walk_lists: Sequence[Sequence[Saw]], budget: int = DEFAULT_BUDGET) -> List[SawTuple]:
    """
    Tuples (one walk per list) that meet only at their common endpoint.

    Built one coordinate at a time, pruning partial tuples that already
    intersect.
    """
    partial: List[Tuple[Tuple[Saw, ...], FrozenSet[Site]]] = [((), frozenset())]
    for walks in walk_lists:
        extended = []
        for chosen, used in partial:
            for walk in walks:
                body = walk.vertex_set - {walk.end}
                if used & body:
                    continue
                extended.append((chosen + (walk,), used | body))
                if len(extended) > budget:
                    raise EnumerationBudgetExceeded(len(extended), [SawTuple(c) for c, _ in extended])
        partial = extended
    return [SawTuple(chosen) for chosen, _ in partial]

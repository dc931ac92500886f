"""
The configurational measure on tuples of self-avoiding walks.

    nu_{A,c}(eta) = exp(-beta |eta|) I(eta) F_eta(A)^{c/2}

where F_eta(A) is the loop factor of the union of the walks' vertices.
"""

import math
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence

import numpy as np
import pandas as pd
from loguru import logger

from ..utils.parallel import Mapper
from .domain import LatticeDomain, Site
from .loops import loop_mass
from .saws import DEFAULT_BUDGET, EnumerationBudgetExceeded, SawTuple, disjoint_tuples, enumerate_saws

MAX_CURVES = 4


class LoopMassCache:
    """log F_V(A) keyed by the vertex set V."""

    def __init__(self, domain: LatticeDomain):
        self.domain = domain
        self._values: Dict[FrozenSet[Site], float] = {}
        self.hits = 0

    def __call__(self, vertices: FrozenSet[Site]) -> float:
        cached = self._values.get(vertices)
        if cached is not None:
            self.hits += 1
            return cached
        value = loop_mass(self.domain, vertices)
        self._values[vertices] = value
        return value

    def __len__(self) -> int:
        return len(self._values)


def measure_nu(walks: SawTuple, domain: LatticeDomain, c: float, beta: float,
               cache: Optional[LoopMassCache] = None) -> float:
    """
    nu_{A,c} of one tuple.

    Args:
        walks: Tuple of walks in A
        domain: Domain A
        c: Central charge exponent
        beta: Length penalty
        cache: Optional loop-mass cache for repeated vertex sets

    Returns:
        exp(-beta |eta|) I(eta) F_eta(A)^{c/2}
    """
    if not walks.indicator:
        return 0.0
    vertices = domain.check_subset(walks.vertex_set)
    log_f = cache(vertices) if cache is not None else loop_mass(domain, vertices)
    return math.exp(-beta * walks.length + 0.5 * c * log_f)


@dataclass
class TupleCatalog:
    """
    Lengths and loop masses of every admissible tuple for one (A, starts, target).

    Evaluating a partition sum at another (c, beta) reuses the catalog.
    """
    domain: LatticeDomain
    starts: List[Site]
    target: Site
    lengths: np.ndarray
    log_masses: np.ndarray
    walk_counts: List[int] = field(default_factory=list)

    @property
    def n(self) -> int:
        return len(self.starts)

    @property
    def min_length(self) -> int:
        """Shortest total length (0 when the catalog is empty)."""
        return int(self.lengths.min()) if self.lengths.size else 0

    def total(self, c: float, beta: float) -> float:
        """Compensated sum of nu over the catalog."""
        return math.fsum(np.exp(-beta * self.lengths + 0.5 * c * self.log_masses).tolist())


def _check_starts(domain: LatticeDomain, starts: Sequence[Site], target: Site) -> List[Site]:
    points = [tuple(s) for s in starts]
    if not 1 <= len(points) <= MAX_CURVES:
        raise ValueError(f"starts: between 1 and {MAX_CURVES} walks supported, got {len(points)}")
    if len(set(points)) != len(points):
        raise ValueError("starts must be distinct")
    for site in points + [tuple(target)]:
        if site not in domain:
            raise ValueError(f"site {site} is not in the domain")
    return points


def build_catalog(domain: LatticeDomain, starts: Sequence[Site], target: Site,
                  cap: Optional[int] = None, budget: int = DEFAULT_BUDGET,
                  mapper: Optional[Mapper] = None) -> TupleCatalog:
    """
    Enumerate the walk tuples of a partition sum once.

    Args:
        domain: Domain A
        starts: One start per walk (1 to 4 distinct sites)
        target: Common endpoint
        cap: Optional maximum walk length
        budget: Enumeration budget for walks and for tuples
        mapper: map-like callable over first-move branches

    Raises:
        EnumerationBudgetExceeded: If walks or tuples exceed the budget
    """
    points = _check_starts(domain, starts, target)
    target = tuple(target)
    walk_lists = [enumerate_saws(domain, s, target, cap=cap, budget=budget, mapper=mapper) for s in points]
    tuples = disjoint_tuples(walk_lists, budget=budget)

    cache = LoopMassCache(domain)
    lengths = np.array([t.length for t in tuples], dtype=float)
    log_masses = np.array([cache(t.vertex_set) for t in tuples], dtype=float)
    logger.debug(f"{len(tuples)} admissible tuples, {len(cache)} distinct vertex sets, "
                 f"{cache.hits} cache hits")
    return TupleCatalog(domain, points, target, lengths, log_masses, [len(w) for w in walk_lists])


def partition_sum(domain: LatticeDomain, starts: Sequence[Site], target: Site, c: float, beta: float,
                  cap: Optional[int] = None, budget: int = DEFAULT_BUDGET,
                  mapper: Optional[Mapper] = None) -> float:
    """
    Total nu_{A,c} mass of non-intersecting tuples from the starts to the target.

    Raises:
        EnumerationBudgetExceeded: With the partial enumeration attached
    """
    try:
        catalog = build_catalog(domain, starts, target, cap=cap, budget=budget, mapper=mapper)
    except EnumerationBudgetExceeded:
        logger.error(f"Partition sum on {domain.name} exceeded the budget of {budget}")
        raise
    return catalog.total(c, beta)


def sweep(catalog: TupleCatalog, c_values: Iterable[float], betas: Iterable[float]) -> pd.DataFrame:
    """Partition sums on a (c, beta) grid: columns beta, c, n, partition_sum."""
    betas = list(betas)
    rows = [
        {"beta": float(beta), "c": float(c), "n": catalog.n, "partition_sum": catalog.total(c, beta)}
        for c in c_values
        for beta in betas
    ]
    return pd.DataFrame(rows, columns=["beta", "c", "n", "partition_sum"])

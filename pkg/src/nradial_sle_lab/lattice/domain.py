"""
Finite subsets of the square lattice and their random-walk matrices.

Q is the transition matrix of simple random walk killed on leaving the
domain: Q[x, y] = 1/4 for nearest neighbours x, y in A. I - Q is symmetric
positive definite for every finite A, so log-determinants come from a
Cholesky factorisation.
"""

from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Tuple

import numpy as np
from scipy import linalg

Site = Tuple[int, int]

# Moves in enumeration order: E, N, W, S.
MOVES: Tuple[Site, ...] = ((1, 0), (0, 1), (-1, 0), (0, -1))
MAX_SITES = 400
STEP_WEIGHT = 0.25


def neighbours(site: Site) -> List[Site]:
    """The four lattice neighbours of a site in E, N, W, S order."""
    x, y = site
    return [(x + dx, y + dy) for dx, dy in MOVES]


@dataclass(frozen=True)
class LatticeDomain:
    """
    A finite set A of lattice sites.

    Attributes:
        sites: Sites sorted lexicographically
        name: Label used in manifests and result files
    """
    sites: Tuple[Site, ...]
    name: str = "domain"
    _index: Dict[Site, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        """Validate and index the sites."""
        cleaned = tuple(sorted({(int(x), int(y)) for x, y in self.sites}))
        if not cleaned:
            raise ValueError("sites must not be empty")
        if len(cleaned) > MAX_SITES:
            raise ValueError(f"sites: {len(cleaned)} sites exceed the cap of {MAX_SITES}")
        object.__setattr__(self, "sites", cleaned)
        object.__setattr__(self, "_index", {s: i for i, s in enumerate(cleaned)})

    @classmethod
    def rect(cls, width: int, height: int) -> "LatticeDomain":
        """The block {0..width-1} x {0..height-1}."""
        if width < 1 or height < 1:
            raise ValueError(f"rect dimensions must be positive, got {width}x{height}")
        return cls(tuple((x, y) for x in range(width) for y in range(height)),
                   name=f"rect{width}x{height}")

    def __len__(self) -> int:
        return len(self.sites)

    def __contains__(self, site) -> bool:
        return tuple(site) in self._index

    def index(self, site: Site) -> int:
        """Row of a site in Q."""
        return self._index[tuple(site)]

    def neighbours_in(self, site: Site) -> List[Site]:
        """Neighbours of a site that lie in A, in E, N, W, S order."""
        return [s for s in neighbours(site) if s in self._index]

    def boundary_sites(self) -> List[Site]:
        """Sites of A with at least one neighbour outside A."""
        return [s for s in self.sites if len(self.neighbours_in(s)) < 4]

    def check_subset(self, vertices: Iterable[Site]) -> FrozenSet[Site]:
        """Return the vertices as a frozenset, raising if one is outside A."""
        subset = frozenset(tuple(v) for v in vertices)
        outside = [v for v in subset if v not in self._index]
        if outside:
            raise ValueError(f"V must be a subset of A; outside sites: {sorted(outside)[:5]}")
        return subset

    def transition_matrix(self, excluded: Optional[Iterable[Site]] = None) -> np.ndarray:
        """
        Q restricted to A minus the excluded sites.

        Rows follow the order of the remaining sites.
        """
        removed = frozenset(tuple(v) for v in excluded) if excluded is not None else frozenset()
        kept = [s for s in self.sites if s not in removed]
        position = {s: i for i, s in enumerate(kept)}
        q = np.zeros((len(kept), len(kept)))
        for i, s in enumerate(kept):
            for t in neighbours(s):
                j = position.get(t)
                if j is not None:
                    q[i, j] = STEP_WEIGHT
        return q

    def log_det_laplacian(self, excluded: Optional[Iterable[Site]] = None) -> float:
        """log det(I - Q) on A minus the excluded sites (0 for the empty set)."""
        q = self.transition_matrix(excluded)
        if q.size == 0:
            return 0.0
        factor = linalg.cholesky(np.eye(q.shape[0]) - q, lower=True)
        return float(2.0 * np.sum(np.log(np.diag(factor))))

    def spectral_radius(self) -> float:
        """Largest eigenvalue modulus of Q (< 1 on a finite domain)."""
        return float(np.max(np.abs(np.linalg.eigvalsh(self.transition_matrix()))))

    def to_dict(self) -> Dict[str, object]:
        """JSON-friendly site list."""
        return {"name": self.name, "sites": [list(s) for s in self.sites]}

"""
Random-walk loop measure on a finite domain.

A rooted loop of length 2k carries weight (2k)^{-1} 4^{-2k}. Summing over
loops that stay in A gives -log det(I - Q_A), so the mass of loops in A that
hit V is

    log F_V(A) = log det(I - Q_{A minus V}) - log det(I - Q_A).

The cutoff enumerator counts the same loops length by length through traces
of powers of Q and serves as an independent check of the determinant value.
"""

import math
from typing import Iterable, NamedTuple, Optional

import numpy as np

from .domain import LatticeDomain, Site

MAX_CUTOFF_LENGTH = 24


class LoopSum(NamedTuple):
    """Truncated loop mass with a certified bound on the omitted tail."""
    log_mass: float
    tail_bound: float
    max_len: int

    @property
    def value(self) -> float:
        """F_V(A) from the truncated sum."""
        return math.exp(self.log_mass)

    def contains(self, exact_log_mass: float, slack: float = 1e-12) -> bool:
        """True when an exact value lies within the certified tail."""
        return self.log_mass - slack <= exact_log_mass <= self.log_mass + self.tail_bound + slack


def loop_mass(domain: LatticeDomain, vertices: Iterable[Site]) -> float:
    """
    log F_V(A), the loop-measure mass of loops in A that intersect V.

    Args:
        domain: Domain A
        vertices: Vertex set V, a subset of A

    Returns:
        Non-negative log F_V(A)

    Raises:
        ValueError: If V is not contained in A
    """
    subset = domain.check_subset(vertices)
    if not subset:
        return 0.0
    mass = domain.log_det_laplacian(subset) - domain.log_det_laplacian()
    return max(mass, 0.0)


def tail_bound(domain: LatticeDomain, max_len: int, spectral_radius: Optional[float] = None) -> float:
    """
    Bound on the loop mass of loops longer than max_len.

    Uses tr(Q^L) <= |A| rho^L over even L >= max_len + 2.
    """
    rho = domain.spectral_radius() if spectral_radius is None else spectral_radius
    first = max_len + 2
    return len(domain) * rho ** first / (first * (1.0 - rho ** 2))


def enumerate_loops_cutoff(domain: LatticeDomain, vertices: Iterable[Site], max_len: int) -> LoopSum:
    """
    Loop mass of loops hitting V with length at most max_len.

    Closed walks of length L in A number 4^L tr(Q_A^L); those avoiding V
    number 4^L tr(Q_{A minus V}^L). Their difference over L is the rooted
    weight of loops hitting V.

    Args:
        domain: Domain A
        vertices: Vertex set V
        max_len: Even length cutoff, at most 24

    Returns:
        LoopSum with the truncated log mass and its tail bound
    """
    if max_len < 0 or max_len % 2:
        raise ValueError(f"max_len must be a non-negative even integer, got {max_len}")
    if max_len > MAX_CUTOFF_LENGTH:
        raise ValueError(f"max_len must be <= {MAX_CUTOFF_LENGTH}, got {max_len}")
    subset = domain.check_subset(vertices)

    q_full = domain.transition_matrix()
    q_rest = domain.transition_matrix(subset)
    power_full = np.eye(q_full.shape[0])
    power_rest = np.eye(q_rest.shape[0])
    terms = []
    for length in range(1, max_len + 1):
        power_full = power_full @ q_full
        power_rest = power_rest @ q_rest
        if length % 2 == 0:
            terms.append((np.trace(power_full) - np.trace(power_rest)) / length)

    return LoopSum(math.fsum(terms), tail_bound(domain, max_len), max_len)

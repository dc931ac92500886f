"""
Configuration validation module.

This module checks raw angle data before it enters the exact formulas or the
simulators, and scans recorded paths for near-collisions.
"""

import math
from typing import Iterable, List, Sequence

import numpy as np

from .config import AngleConfig
from .potentials import cyclic_gaps_array


class ConfigValidator:
    """
    Validates and cleans angle configurations.

    Raw input (config files, random draws, recorded paths) is checked against
    the X_n membership rules before it reaches code that assumes them.
    """

    def __init__(self, min_gap: float = 0.0):
        """
        Initialize ConfigValidator.

        Args:
            min_gap: Gaps must exceed this to count as valid
        """
        if min_gap < 0:
            raise ValueError("min_gap must be non-negative")
        self.min_gap = min_gap

    def validate_angles(self, values: Sequence[float]) -> bool:
        """
        Check that values form an ordered representative of X_n.

        Args:
            values: Candidate angles theta^1, ..., theta^n

        Returns:
            True if the angles are finite, strictly increasing, span less than
            pi and keep every cyclic gap above min_gap
        """
        angles = np.asarray(values, dtype=float)
        if angles.ndim != 1 or angles.size < 2:
            return False
        if not np.all(np.isfinite(angles)):
            return False
        if np.any(np.diff(angles) <= 0) or angles[-1] - angles[0] >= math.pi:
            return False
        return bool(cyclic_gaps_array(angles).min() > self.min_gap)

    def clean_configs(self, rows: Iterable[Sequence[float]]) -> List[AngleConfig]:
        """
        Canonicalise valid rows and drop the rest.

        Args:
            rows: Ordered angle vectors

        Returns:
            AngleConfig for every valid row, in input order
        """
        cleaned = []
        for row in rows:
            if self.validate_angles(row):
                cleaned.append(AngleConfig.from_ordered(row))
        return cleaned

    def detect_collisions(self, thetas: np.ndarray, threshold: float) -> List[int]:
        """
        Find time indices where a path comes closer than threshold to a collision.

        Args:
            thetas: Recorded angles, shape (n_times, n)
            threshold: Gap below which a time index is reported

        Returns:
            List of indices where the minimal cyclic gap is below threshold
        """
        gaps = cyclic_gaps_array(np.asarray(thetas, dtype=float)).min(axis=-1)
        return [int(i) for i in np.flatnonzero(gaps < threshold)]

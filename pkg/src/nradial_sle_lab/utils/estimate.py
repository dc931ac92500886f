"""
Monte-Carlo estimate record.

Every stochastic check in the laboratory reduces to a mean with a standard
error; this module holds that record and the reduction that produces it.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import numpy as np


@dataclass(frozen=True)
class Estimate:
    """
    A Monte-Carlo (or quadrature) estimate with its error bar.

    Attributes:
        mean: Point estimate
        std_error: Standard error of the mean (0 for exact values)
        n_samples: Number of samples (or quadrature nodes) behind the value
        metadata: Parameter echo and method details
    """
    mean: float
    std_error: float
    n_samples: int
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        """Check the record invariants."""
        if self.std_error < 0 or not np.isfinite(self.std_error):
            raise ValueError(f"std_error must be finite and >= 0, got {self.std_error}")
        if self.n_samples < 1:
            raise ValueError(f"n_samples must be >= 1, got {self.n_samples}")

    def z_score(self, expected: float) -> float:
        """Distance from an expected value in units of standard error."""
        if self.std_error == 0:
            return 0.0 if self.mean == expected else float("inf")
        return abs(self.mean - expected) / self.std_error

    def agrees_with(self, other: "Estimate", n_sigma: float = 3.0) -> bool:
        """True when two estimates differ by less than n_sigma combined errors."""
        combined = float(np.hypot(self.std_error, other.std_error))
        if combined == 0:
            return self.mean == other.mean
        return abs(self.mean - other.mean) < n_sigma * combined

    def to_dict(self) -> Dict[str, Any]:
        """Flat dictionary for CSV/JSON emission."""
        return {
            "mean": self.mean,
            "std_error": self.std_error,
            "n_samples": self.n_samples,
        }

    def __str__(self) -> str:
        """String representation of the estimate."""
        return f"Estimate({self.mean:.6g} +/- {self.std_error:.2g}, n={self.n_samples})"


def estimate_from_samples(samples: np.ndarray,
                          metadata: Optional[Dict[str, Any]] = None) -> Estimate:
    """
    Reduce per-path samples to an Estimate.

    Args:
        samples: One value per independent path
        metadata: Parameter echo to attach

    Returns:
        Estimate with the sample mean and standard error of the mean
    """
    values = np.asarray(samples, dtype=float).ravel()
    if values.size == 0:
        raise ValueError("Cannot estimate from an empty sample")

    if values.size == 1:
        std_error = 0.0
    else:
        std_error = float(np.std(values, ddof=1) / np.sqrt(values.size))

    return Estimate(
        mean=float(np.mean(values)),
        std_error=std_error,
        n_samples=int(values.size),
        metadata=dict(metadata or {}),
    )

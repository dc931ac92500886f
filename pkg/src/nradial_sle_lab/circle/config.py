"""
Configuration-space types for n points on the circle.

A configuration is stored through its angles theta^1 < ... < theta^n <
theta^1 + pi, with the point form z^j = exp(2 i theta^j) available as a view.
"""

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Tuple

import numpy as np

# Gaps below this are treated as collisions.
DEGENERATE_GAP = 1e-12


class DegenerateConfigError(ValueError):
    """Raised when a formula with a singular kernel meets colliding points."""

    def __init__(self, gap: float, operation: str):
        self.gap = gap
        self.operation = operation
        super().__init__(f"{operation}: configuration is degenerate (min gap {gap:.3e} < {DEGENERATE_GAP:g})")


def _canonical_shift(first_angle: float) -> float:
    """Multiple of pi that moves first_angle into [0, pi)."""
    shift = math.pi * math.floor(first_angle / math.pi)
    if first_angle - shift >= math.pi:
        shift += math.pi
    return shift


@dataclass(frozen=True)
class AngleConfig:
    """
    An ordered point of the configuration space X_n.

    Attributes:
        angles: theta^1 < ... < theta^n < theta^1 + pi with theta^1 in [0, pi)
        strict: False only for configurations built by ``relaxed`` that may
            contain coincident points
    """
    angles: Tuple[float, ...]
    strict: bool = field(default=True, compare=False)

    def __post_init__(self) -> None:
        """Validate membership in X_n."""
        angles = tuple(float(x) for x in self.angles)
        object.__setattr__(self, "angles", angles)

        if len(angles) < 2:
            raise ValueError(f"A configuration needs n >= 2 points, got {len(angles)}")
        if not all(math.isfinite(x) for x in angles):
            raise ValueError("Angles must be finite")
        if not 0.0 <= angles[0] < math.pi:
            raise ValueError(f"theta^1 must lie in [0, pi), got {angles[0]}")

        diffs = np.diff(angles)
        span = angles[-1] - angles[0]
        if self.strict:
            if np.any(diffs <= 0):
                raise ValueError(f"Angles must be strictly increasing: {angles}")
            if span >= math.pi:
                raise ValueError(f"theta^n - theta^1 must be < pi, got {span}")
        else:
            if np.any(diffs < 0) or span > math.pi:
                raise ValueError(f"Angles are not a (possibly degenerate) canonical configuration: {angles}")

    @classmethod
    def from_ordered(cls, values: Iterable[float]) -> "AngleConfig":
        """
        Canonicalise an ordered representative, keeping the labels.

        The whole tuple is shifted by a multiple of pi so that theta^1 lands in
        [0, pi); ordering is checked, not repaired.
        """
        angles = np.asarray(list(values), dtype=float)
        if angles.size == 0:
            raise ValueError("Empty configuration")
        shifted = angles - _canonical_shift(float(angles[0]))
        return cls(tuple(shifted))

    @classmethod
    def relaxed(cls, values: Iterable[float]) -> "AngleConfig":
        """
        Canonicalise arbitrary angles: reduce mod pi and sort.

        Labels follow the sorted order; coincident points are accepted.
        """
        reduced = np.mod(np.asarray(list(values), dtype=float), math.pi)
        reduced[reduced >= math.pi] = 0.0
        reduced.sort()
        strict = bool(np.all(np.diff(reduced) > 0)) and reduced[-1] - reduced[0] < math.pi
        return cls(tuple(reduced), strict=strict)

    @classmethod
    def equally_spaced(cls, n: int, offset: float = 0.0) -> "AngleConfig":
        """The symmetric configuration theta^j = offset + (j-1) pi/n."""
        return cls.from_ordered(offset + math.pi * np.arange(n) / n)

    @property
    def n(self) -> int:
        """Number of points."""
        return len(self.angles)

    @property
    def array(self) -> np.ndarray:
        """Angles as a fresh float array."""
        return np.array(self.angles, dtype=float)

    @property
    def gaps(self) -> np.ndarray:
        """Cyclic gaps theta^{j+1} - theta^j with theta^{n+1} = theta^1 + pi."""
        angles = self.array
        return np.diff(np.append(angles, angles[0] + math.pi))

    def min_gap(self) -> float:
        """Smallest cyclic gap."""
        return float(self.gaps.min())

    def rotated(self, c: float) -> "AngleConfig":
        """
        Apply theta -> theta + c mod pi to every point and re-canonicalise.

        The result is the sorted representative in [0, pi), so labels follow
        the new order and equal point sets give equal configurations.
        """
        return AngleConfig.relaxed(self.array + c)

    def points(self) -> np.ndarray:
        """Point form z^j = exp(2 i theta^j) on the unit circle."""
        return np.exp(2j * self.array)

    def __str__(self) -> str:
        """String representation of the configuration."""
        body = ", ".join(f"{x:.4f}" for x in self.angles)
        return f"AngleConfig(n={self.n}, [{body}])"


@dataclass(frozen=True)
class ModelParams:
    """
    Parameters of the n-radial Bessel process and its SLE interpretation.

    Attributes:
        n: Number of points/curves
        alpha: Drift coefficient of the Bessel SDE
        a: SLE parameter 2/kappa when alpha is tied to a curve model
    """
    n: int
    alpha: float
    a: Optional[float] = None

    def __post_init__(self) -> None:
        """Validate parameter ranges."""
        if not isinstance(self.n, (int, np.integer)) or self.n < 2:
            raise ValueError(f"n must be an integer >= 2, got {self.n}")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")
        if self.a is not None and not self.a > 0:
            raise ValueError(f"a must be > 0, got {self.a}")

    @classmethod
    def from_kappa(cls, n: int, kappa: float, multiplier: float = 1.0) -> "ModelParams":
        """
        Parameters for SLE_kappa drivers.

        Args:
            n: Number of curves
            kappa: SLE parameter (a = 2/kappa)
            multiplier: 1 for locally independent drivers (alpha = a),
                2 for n-radial drivers (alpha = 2a)
        """
        if not kappa > 0:
            raise ValueError(f"kappa must be > 0, got {kappa}")
        a = 2.0 / kappa
        return cls(n=n, alpha=multiplier * a, a=a)

    @classmethod
    def for_driver(cls, n: int, kappa: float, law: str = "n-radial") -> "ModelParams":
        """
        Parameters of the Bessel process driving n curves under a named law.

        Args:
            n: Number of curves
            kappa: SLE parameter, must satisfy kappa < 8
            law: "locally-independent" (alpha = a) or "n-radial" (alpha = 2a)

        Raises:
            ValueError: If the law is unknown or kappa >= 8
        """
        multipliers = {"locally-independent": 1.0, "n-radial": 2.0}
        if law not in multipliers:
            raise ValueError(f"law must be one of {sorted(multipliers)}, got {law!r}")
        if not kappa < 8:
            raise ValueError(f"kappa must satisfy κ < 8 for Bessel-law drivers, got {kappa}")
        return cls.from_kappa(n, kappa, multipliers[law])

    @property
    def b_alpha(self) -> float:
        """b_alpha = (3 alpha - 1)/2."""
        return (3.0 * self.alpha - 1.0) / 2.0

    @property
    def beta(self) -> float:
        """beta = alpha (n^2 - 1)/4."""
        return self.alpha * (self.n ** 2 - 1) / 4.0

    @property
    def decay_rate(self) -> float:
        """2 alpha n beta, the exponential decay rate of the Feynman-Kac functional."""
        return 2.0 * self.alpha * self.n * self.beta

    def _require_a(self) -> float:
        if self.a is None:
            raise ValueError("SLE quantities need the parameter a (use ModelParams.from_kappa)")
        return self.a

    @property
    def kappa(self) -> float:
        """kappa = 2/a."""
        return 2.0 / self._require_a()

    @property
    def b(self) -> float:
        """Boundary scaling exponent b = (3a - 1)/2 = (6 - kappa)/(2 kappa)."""
        return (3.0 * self._require_a() - 1.0) / 2.0

    @property
    def b_tilde(self) -> float:
        """Interior scaling exponent b (1 - a)/(2a) = b (kappa - 2)/4."""
        a = self._require_a()
        return self.b * (1.0 - a) / (2.0 * a)

    @property
    def central_charge(self) -> float:
        """c = (3 kappa - 8)(6 - kappa)/(2 kappa)."""
        kappa = self.kappa
        return (3.0 * kappa - 8.0) * (6.0 - kappa) / (2.0 * kappa)

    @property
    def fractal_dimension(self) -> float:
        """Dimension 1 + kappa/8 of the curves."""
        return 1.0 + self.kappa / 8.0

    @property
    def beta_hat(self) -> float:
        """n-interior scaling exponent beta - b_tilde (n - 1), defined for alpha = a."""
        if self.a is None or not math.isclose(self.alpha, self.a):
            raise ValueError("beta_hat is defined for alpha = a")
        return self.beta - self.b_tilde * (self.n - 1)

    @property
    def beta_hat_closed_form(self) -> float:
        """The closed form (4(n^2-1) + (6-kappa)(kappa-2))/(8 kappa) quoted alongside beta_hat."""
        kappa = self.kappa
        return (4.0 * (self.n ** 2 - 1) + (6.0 - kappa) * (kappa - 2.0)) / (8.0 * kappa)

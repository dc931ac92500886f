"""
Driving processes for the n-slit radial Loewner flow.

Three laws are available under the common parameterization:

- locally independent: d theta^j = a sum cot(theta^j - theta^k) dt + dW^j
- n-radial:            d theta^j = 2a sum cot(theta^j - theta^k) dt + dW^j
- independent (n = 2): two radial SLE paths in their own capacity time,
  time-changed by sigma'^j(t) = h'_{t,j}(xi^j_t)^{-2}
"""

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
from loguru import logger

from ..circle.config import AngleConfig
from ..circle.potentials import cyclic_gaps_array
from ..circle.validator import ConfigValidator
from ..dyson.engine import simulate
from ..dyson.options import SimOptions
from ..dyson.stepper import expected_steps
from ..utils.rng import path_generator
from .chain import SlitMapChain, advance_maps, flow_covering, unwrap_angles

# Sample points on the circle used for Cauchy-integral derivatives.
CAUCHY_POINTS = 32


class DriverLaw(Enum):
    """Law of the driving angles."""
    INDEPENDENT = "independent"
    LOCALLY_INDEPENDENT = "locally-independent"
    N_RADIAL = "n-radial"

    @property
    def multiplier(self) -> Optional[float]:
        """Drift coefficient as a multiple of a (None for the time-changed law)."""
        return {DriverLaw.INDEPENDENT: None,
                DriverLaw.LOCALLY_INDEPENDENT: 1.0,
                DriverLaw.N_RADIAL: 2.0}[self]


@dataclass
class DrivingPaths:
    """
    Driving angles on a time grid.

    Attributes:
        times: Increasing grid starting at 0
        thetas: Angles, shape (len(times), n), continuous in t (not reduced mod pi)
        a: SLE parameter 2/kappa
        law: Driving law
        flags: Run diagnostics (e.g. 'collided', 'terminated_at')
    """
    times: np.ndarray
    thetas: np.ndarray
    a: float
    law: DriverLaw
    flags: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        """Validate shapes and grid."""
        self.times = np.asarray(self.times, dtype=float)
        self.thetas = np.atleast_2d(np.asarray(self.thetas, dtype=float))
        if self.thetas.shape[0] != self.times.shape[0]:
            raise ValueError("times and thetas must have the same length")
        if self.times[0] != 0 or np.any(np.diff(self.times) <= 0):
            raise ValueError("times must start at 0 and increase strictly")

    @property
    def n(self) -> int:
        """Number of curves."""
        return int(self.thetas.shape[1])

    @property
    def configs(self) -> List[AngleConfig]:
        """Canonical configurations (n >= 2)."""
        return [AngleConfig.from_ordered(row) for row in self.thetas]

    def min_gaps(self) -> np.ndarray:
        """Smallest cyclic gap at each time (pi for a single curve)."""
        return cyclic_gaps_array(self.thetas).min(axis=-1)

    def near_collisions(self, threshold: float) -> List[int]:
        """Grid indices where two driving points come closer than threshold."""
        return ConfigValidator().detect_collisions(self.thetas, threshold)

    def to_dict(self) -> Dict[str, Any]:
        """JSON-friendly replay bundle."""
        return {
            "a": self.a,
            "law": self.law.value,
            "times": self.times.tolist(),
            "thetas": self.thetas.tolist(),
            "flags": dict(self.flags),
        }


def build_chain(driving: DrivingPaths) -> SlitMapChain:
    """Map chain driven by the recorded angles, one step per grid interval."""
    chain = SlitMapChain.begin(driving.a, driving.thetas[0])
    for k in range(1, len(driving.times)):
        chain = advance_maps(chain, driving.thetas[k], driving.times[k] - driving.times[k - 1])
    return chain


def rotate(driving: DrivingPaths, c: float) -> DrivingPaths:
    """Driving angles shifted by c; traces rotate by exp(2ic)."""
    return replace(driving, thetas=driving.thetas + c, flags=dict(driving.flags))


def cauchy_value_and_derivative(func, center: float, radius: float,
                                n_points: int = CAUCHY_POINTS) -> Tuple[complex, complex]:
    """
    Value and derivative at a real point of a function real on the real axis.

    Only the upper half of the circle is evaluated; the lower half follows by
    Schwarz reflection f(conj z) = conj f(z).
    """
    if n_points % 2:
        raise ValueError("n_points must be even")
    phases = 2.0 * math.pi * (np.arange(n_points) + 0.5) / n_points
    upper = phases[: n_points // 2]
    upper_values = func(center + radius * np.exp(1j * upper))
    values = np.concatenate([upper_values, np.conj(upper_values[::-1])])
    nodes = np.exp(1j * phases)
    value = values.mean()
    derivative = np.mean(values / nodes) / radius
    return complex(value), complex(derivative)


def factor_map(common: SlitMapChain, single: SlitMapChain):
    """h_{t,j} = h_t o (h_t^j)^{-1} on covering coordinates in the upper half plane."""
    def func(zeta: np.ndarray) -> np.ndarray:
        return flow_covering(common, flow_covering(single, zeta, backward=True))
    return func


def time_change_rate(common: SlitMapChain, single: SlitMapChain, xi: float,
                     radius: float) -> Tuple[float, float]:
    """
    theta^j = h_{t,j}(xi^j) and sigma'^j = h'_{t,j}(xi^j)^{-2}.

    Args:
        common: Chain of the combined map g_t
        single: Chain of the single-slit map g_t^j in its own time
        xi: Current driver of the single-slit chain
        radius: Radius of the Cauchy circle around xi

    Returns:
        (theta^j, sigma'^j)
    """
    value, derivative = cauchy_value_and_derivative(factor_map(common, single), xi, radius)
    return float(value.real), float(abs(derivative) ** -2)


def _independent_driver(cfg0: AngleConfig, a: float, t_end: float,
                        opts: SimOptions) -> DrivingPaths:
    """Time-changed independent radial SLE drivers for two curves."""
    dt = opts.dt
    n_steps = expected_steps(t_end, dt)
    rng = path_generator(opts.seed, 0)
    fine = opts.noise_substeps

    common = SlitMapChain.begin(a, cfg0.array)
    singles = [SlitMapChain.begin(a, [x]) for x in cfg0.array]
    xi = cfg0.array.copy()
    theta = cfg0.array.copy()
    rates = np.ones(2)

    times = [0.0]
    thetas = [theta.copy()]
    sigma_rates = [rates.copy()]
    flags: Dict[str, Any] = {"collided": False}

    for k in range(n_steps):
        h = min(dt, t_end - k * dt)
        gap = float(cyclic_gaps_array(theta).min())
        if gap < opts.gap_floor:
            flags.update(collided=True, terminated_at=times[-1])
            logger.warning(f"Independent driver terminated at t={times[-1]:.4g}: gap {gap:.3e}")
            break
        radius = min(0.05, 0.2 * gap)

        own_dt = rates * h
        if fine == 1:
            noise = rng.standard_normal(2)
        else:
            noise = rng.standard_normal((fine, 2)).sum(axis=0) / math.sqrt(fine)
        xi_next = xi + np.sqrt(own_dt) * noise
        singles = [advance_maps(s, [x], d) for s, x, d in zip(singles, xi_next, own_dt)]

        predicted_common = advance_maps(common, theta, h)
        predicted = np.array([time_change_rate(predicted_common, singles[j], xi_next[j], radius)[0]
                              for j in range(2)])
        common = advance_maps(common, unwrap_angles(theta, predicted), h)

        theta_rate = [time_change_rate(common, singles[j], xi_next[j], radius) for j in range(2)]
        theta = unwrap_angles(theta, np.array([v for v, _ in theta_rate]))
        rates = np.array([r for _, r in theta_rate])
        xi = xi_next

        times.append(times[-1] + h)
        thetas.append(theta.copy())
        sigma_rates.append(rates.copy())

    flags["sigma_rates"] = np.array(sigma_rates).tolist()
    driving = DrivingPaths(np.array(times), np.array(thetas), a, DriverLaw.INDEPENDENT, flags)
    return _flag_near_collisions(driving, opts.gap_floor)


def _flag_near_collisions(driving: DrivingPaths, threshold: float) -> DrivingPaths:
    """Record how many grid times fall below the gap floor."""
    hits = driving.near_collisions(threshold)
    driving.flags["near_collisions"] = len(hits)
    if hits:
        logger.warning(f"{driving.law.value} driver within {threshold} of a collision "
                       f"at {len(hits)} grid times, first at t={driving.times[hits[0]]:.4g}")
    return driving


def generate_driver(law: Union[DriverLaw, str], cfg0: Union[AngleConfig, np.ndarray], a: float,
                    t_end: float, opts: SimOptions) -> DrivingPaths:
    """
    Generate driving angles under one of the three laws.

    Args:
        law: Driving law
        cfg0: Starting angles (a bare array allows a single curve)
        a: SLE parameter 2/kappa
        t_end: Horizon
        opts: Simulation options (seed, dt, gap floor)

    Returns:
        DrivingPaths satisfying the common parameterization
    """
    law = DriverLaw(law)
    if not a > 0:
        raise ValueError(f"a must be > 0, got {a}")
    if a < 0.5:
        logger.warning(f"a={a} < 1/2 (kappa > 4): curves may collide")

    if law is DriverLaw.INDEPENDENT:
        if not isinstance(cfg0, AngleConfig) or cfg0.n != 2:
            raise ValueError("The independent law is implemented for n = 2 only")
        return _independent_driver(cfg0, a, t_end, opts)

    alpha = law.multiplier * a
    path = simulate(cfg0, alpha, t_end, opts)
    driving = DrivingPaths(path.times, path.thetas, a, law, {"alpha": alpha, "substeps": path.substeps})
    return _flag_near_collisions(driving, opts.gap_floor)

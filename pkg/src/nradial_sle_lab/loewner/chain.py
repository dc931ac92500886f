"""
n-slit radial Loewner maps as chains of elementary flow steps.

With the common parameterization the maps g_t satisfy

    d/dt g_t(w) = 2a g_t(w) sum_j (z_t^j + g_t(w)) / (z_t^j - g_t(w)),

and in covering coordinates g_t(e^{2i zeta}) = e^{2i h_t(zeta)},

    d/dt h_t(zeta) = a sum_j cot(h_t(zeta) - theta_t^j).

A chain stores one record per step (frozen driving angles and duration) and
evaluates g_t by running the ODE through the records.
"""

import math
from dataclasses import dataclass, replace
from typing import Sequence, Tuple, Union

import numpy as np

from ..circle.config import AngleConfig
from ..utils.ode import adaptive_rk4

# An evaluation point closer than this to a driver is swallowed by the hull.
ABSORB_TOL = 1e-7
CAPACITY_EPS = 1e-6

Angles = Union[AngleConfig, Sequence[float], np.ndarray]


def _angles(values: Angles) -> np.ndarray:
    if isinstance(values, AngleConfig):
        return values.array
    return np.atleast_1d(np.asarray(values, dtype=float))


def unwrap_angles(previous: np.ndarray, current: np.ndarray) -> np.ndarray:
    """Representative of current mod pi closest to previous, coordinate-wise."""
    delta = np.mod(current - previous + 0.5 * math.pi, math.pi) - 0.5 * math.pi
    return previous + delta


@dataclass(frozen=True)
class Absorbed:
    """An evaluation point swallowed by the hull at chain time ``time``."""
    time: float


@dataclass(frozen=True)
class MapStep:
    """
    One elementary step of the flow.

    Attributes:
        thetas: Driving angles frozen for the step (midpoint of its end values)
        dt: Duration
    """
    thetas: Tuple[float, ...]
    dt: float

    @property
    def points(self) -> np.ndarray:
        """Frozen drivers in point form exp(2 i theta)."""
        return np.exp(2j * np.asarray(self.thetas))


@dataclass(frozen=True)
class SlitMapChain:
    """
    Composition of elementary radial Loewner steps.

    Attributes:
        a: SLE parameter a = 2/kappa
        start: Driving angles at time 0
        current: Driving angles at the end of the last step (unwrapped)
        steps: Elementary steps in time order
    """
    a: float
    start: Tuple[float, ...]
    current: Tuple[float, ...]
    steps: Tuple[MapStep, ...] = ()

    def __post_init__(self) -> None:
        """Validate parameters."""
        if not self.a > 0:
            raise ValueError(f"a must be > 0, got {self.a}")
        if len(self.start) < 1 or len(self.current) != len(self.start):
            raise ValueError("start and current driving angles must have the same length >= 1")

    @classmethod
    def begin(cls, a: float, thetas: Angles) -> "SlitMapChain":
        """Empty chain (identity map) with drivers at the given angles."""
        start = tuple(float(x) for x in _angles(thetas))
        return cls(a=a, start=start, current=start)

    @property
    def n(self) -> int:
        """Number of slits."""
        return len(self.start)

    @property
    def total_time(self) -> float:
        """Sum of step durations."""
        return float(math.fsum(step.dt for step in self.steps))

    @property
    def expected_log_capacity(self) -> float:
        """log g_t'(0) = 2 a n t under the common parameterization."""
        return 2.0 * self.a * self.n * self.total_time

    def __len__(self) -> int:
        return len(self.steps)


def advance_maps(chain: SlitMapChain, next_thetas: Angles, dt: float) -> SlitMapChain:
    """
    Append one step driven by the midpoint of the current and next angles.

    Args:
        chain: Chain to extend (unchanged)
        next_thetas: Driving angles at the end of the step (any representative mod pi)
        dt: Step duration (>= 0)

    Returns:
        New chain; a zero-duration step only moves the current drivers
    """
    if dt < 0:
        raise ValueError(f"dt must be >= 0, got {dt}")
    target = _angles(next_thetas)
    if target.shape != (chain.n,):
        raise ValueError(f"expected {chain.n} driving angles, got {target.shape}")

    previous = np.asarray(chain.current)
    target = unwrap_angles(previous, target)
    current = tuple(float(x) for x in target)
    if dt == 0:
        return replace(chain, current=current)

    midpoint = tuple(float(x) for x in 0.5 * (previous + target))
    return replace(chain, current=current, steps=chain.steps + (MapStep(midpoint, float(dt)),))


def concatenate(first: SlitMapChain, second: SlitMapChain) -> SlitMapChain:
    """Chain for g_second o g_first: the steps of first followed by those of second."""
    if first.n != second.n or not math.isclose(first.a, second.a):
        raise ValueError("Only chains with equal n and a can be concatenated")
    return SlitMapChain(a=first.a, start=first.start, current=second.current,
                        steps=first.steps + second.steps)


def disk_field(a: float, points: np.ndarray):
    """Vector field 2a g sum (z + g)/(z - g) with frozen drivers z."""
    def field(g: np.ndarray) -> np.ndarray:
        g_col = g[:, None]
        return 2.0 * a * g * np.sum((points + g_col) / (points - g_col), axis=1)
    return field


def covering_field(a: float, thetas: np.ndarray, sign: float = 1.0):
    """Vector field sign * a sum cot(zeta - theta) with frozen drivers."""
    def field(zeta: np.ndarray) -> np.ndarray:
        diff = zeta[:, None] - thetas
        return sign * a * np.sum(np.cos(diff) / np.sin(diff), axis=1)
    return field


def evaluate_many(chain: SlitMapChain, w: Sequence[complex]) -> Tuple[np.ndarray, np.ndarray]:
    """
    Evaluate g_t at many points of the closed disk.

    Args:
        chain: Map chain
        w: Points with |w| <= 1

    Returns:
        (values, absorption times); absorbed points have value nan and a finite
        absorption time, the others absorption time inf
    """
    values = np.array(w, dtype=complex).ravel()
    if np.any(np.abs(values) > 1.0 + 1e-12):
        raise ValueError("Evaluation points must lie in the closed unit disk")
    absorbed_at = np.full(values.shape, np.inf)
    alive = np.ones(values.shape, dtype=bool)

    elapsed = 0.0
    for step in chain.steps:
        points = step.points
        hit = alive & (np.abs(values[:, None] - points).min(axis=1) < ABSORB_TOL)
        absorbed_at[hit] = elapsed
        alive &= ~hit
        if not np.any(alive):
            break

        new_values, failed = adaptive_rk4(disk_field(chain.a, points), values[alive], step.dt)
        index = np.flatnonzero(alive)
        values[index] = new_values
        elapsed += step.dt

        near_point = np.abs(new_values[:, None] - points).min(axis=1) < ABSORB_TOL
        lost = failed | ~np.isfinite(new_values) | near_point
        absorbed_at[index[lost]] = elapsed
        alive[index[lost]] = False

    values[~alive] = np.nan
    return values, absorbed_at


def evaluate_map(chain: SlitMapChain, w: complex) -> Union[complex, Absorbed]:
    """
    g_t(w) for one point, or Absorbed with the time the hull reached it.

    Args:
        chain: Map chain
        w: Point with |w| <= 1
    """
    values, absorbed_at = evaluate_many(chain, [w])
    if np.isfinite(absorbed_at[0]):
        return Absorbed(float(absorbed_at[0]))
    return complex(values[0])


def capacity_report(chain: SlitMapChain, eps: float = CAPACITY_EPS) -> Tuple[float, float]:
    """
    Measured log g_t'(0) against the expected 2 a n t.

    g'(0) is read off from sum_k g(eps i^k) i^{-k} / (4 eps), which cancels
    every Taylor term except those of order 1 mod 4.

    Returns:
        (measured log-derivative, expected value)
    """
    if not chain.steps:
        return 0.0, 0.0
    roots = 1j ** np.arange(4)
    values, absorbed_at = evaluate_many(chain, eps * roots)
    if np.any(np.isfinite(absorbed_at)):
        raise RuntimeError("Points near the origin were absorbed; the chain is degenerate")
    derivative = np.sum(values / roots) / (4.0 * eps)
    return float(math.log(derivative.real)), chain.expected_log_capacity


def boundary_derivative(chain: SlitMapChain, zeta: Union[float, Sequence[float]]) -> np.ndarray:
    """
    |g_t'(e^{2 i zeta})| from exp{-a int sum csc^2(h_s(zeta) - theta_s^j) ds}.

    The covering flow h_s(zeta) and the integral are advanced together.

    Args:
        chain: Map chain
        zeta: Real covering coordinate(s) of boundary points away from the slits

    Returns:
        Array of derivatives, nan where the point reached a slit
    """
    zetas = np.atleast_1d(np.asarray(zeta, dtype=float))
    state = np.column_stack([zetas, np.zeros_like(zetas)])
    a = chain.a

    for step in chain.steps:
        thetas = np.asarray(step.thetas)

        def field(y: np.ndarray) -> np.ndarray:
            diff = y[:, :1] - thetas
            sines = np.sin(diff)
            return np.column_stack([a * np.sum(np.cos(diff) / sines, axis=1),
                                    -a * np.sum(1.0 / sines ** 2, axis=1)])

        state, failed = adaptive_rk4(field, state, step.dt)
        state[failed] = np.nan
    return np.exp(state[:, 1])


def numeric_boundary_derivative(chain: SlitMapChain, zeta: Union[float, Sequence[float]],
                                delta: float = 1e-4) -> np.ndarray:
    """
    |g_t'(e^{2 i zeta})| as the central difference of h_t along the boundary.

    On the circle |g_t'| equals h_t', the derivative of the covering map.
    """
    zetas = np.atleast_1d(np.asarray(zeta, dtype=float))
    values = flow_covering(chain, np.concatenate([zetas + delta, zetas - delta]))
    upper, lower = values[: zetas.size], values[zetas.size:]
    return (upper.real - lower.real) / (2.0 * delta)


def flow_covering(chain: SlitMapChain, zeta: Sequence[complex], backward: bool = False,
                  steps: Union[slice, None] = None) -> np.ndarray:
    """
    Push covering coordinates through the chain (or a slice of its steps).

    Forward flow computes h_t; backward flow runs the steps in reverse with the
    field negated and computes h_t^{-1} for points in the upper half plane.

    Returns:
        Flowed points, nan where the integrator failed
    """
    values = np.array(zeta, dtype=complex).ravel()
    selected = chain.steps[steps] if steps is not None else chain.steps
    ordered = reversed(selected) if backward else selected
    sign = -1.0 if backward else 1.0
    for step in ordered:
        values, failed = adaptive_rk4(covering_field(chain.a, np.asarray(step.thetas), sign), values, step.dt)
        values[failed] = np.nan
    return values

"""
Driving pair of two-path locally independent chordal SLE.

    dX^1 = a / (X^1 - X^2) dt + dB^1,   dX^2 = a / (X^2 - X^1) dt + dB^2

The gap Z = X^2 - X^1 is a Bessel-type process dZ = 2a/Z dt + sqrt(2) dW.
Brownian increments are kept so the discrete scheme can reuse them.
"""

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Dict, Optional

import numpy as np
from loguru import logger

from ..dyson.options import SimOptions
from ..dyson.stepper import expected_steps
from ..utils.rng import BRIDGE_STREAM, bridge_midpoints, path_generator

# a > 1/4 is kappa < 8.
MIN_A = 0.25


class NoiseMode(Enum):
    """How the two Brownian motions are drawn."""
    INDEPENDENT = "independent"
    MIRRORED = "mirrored"
    ZERO = "zero"


@dataclass(frozen=True)
class ChordalPair:
    """Two driving points x1 < x2 on the real line."""
    x1: float
    x2: float
    a: float

    def __post_init__(self) -> None:
        """Validate ordering and a."""
        if not self.x1 < self.x2:
            raise ValueError(f"x1 < x2 required, got {self.x1}, {self.x2}")
        if not self.a > MIN_A:
            raise ValueError(f"a must be > 1/4 (kappa < 8), got {self.a}")

    @property
    def gap(self) -> float:
        """Z = x2 - x1."""
        return self.x2 - self.x1


@dataclass
class PairPath:
    """
    Recorded driving pair on a fine grid.

    Attributes:
        times: Fine grid 0, dt, 2dt, ...
        x: Driving points, shape (len(times), 2)
        increments: Brownian increments per fine step, shape (len(times) - 1, 2)
        a: SLE parameter
        dt: Fine step
        truncated: True when the gap fell below the floor before t_end
        tau: Truncation time (inf when not truncated)
        metadata: Option echo
    """
    times: np.ndarray
    x: np.ndarray
    increments: np.ndarray
    a: float
    dt: float
    truncated: bool = False
    tau: float = math.inf
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def gaps(self) -> np.ndarray:
        """Z_t along the path."""
        return self.x[:, 1] - self.x[:, 0]

    @property
    def t_end(self) -> float:
        """Last recorded time."""
        return float(self.times[-1])

    def first_time_gap_below(self, u: float) -> float:
        """tau_u = first grid time with gap <= u (inf if none)."""
        hits = np.flatnonzero(self.gaps <= u)
        return float(self.times[hits[0]]) if hits.size else math.inf


def _draw_increments(n_steps: int, dt: float, opts: SimOptions, noise: NoiseMode,
                     path_index: int) -> np.ndarray:
    if noise is NoiseMode.ZERO:
        return np.zeros((n_steps, 2))
    rng = path_generator(opts.seed, path_index)
    if noise is NoiseMode.MIRRORED:
        first = rng.standard_normal(n_steps) * math.sqrt(dt)
        return np.column_stack([first, -first])
    return rng.standard_normal((n_steps, 2)) * math.sqrt(dt)


def integrate_pair(x1: float, x2: float, a: float, increments: np.ndarray, dt: float,
                   gap_floor: float) -> PairPath:
    """
    Euler-Maruyama path of the pair for given Brownian increments.

    Stops at the first step whose gap drops below gap_floor.
    """
    n_steps = increments.shape[0]
    x = np.empty((n_steps + 1, 2))
    x[0] = (x1, x2)
    truncated = False
    last = n_steps
    for k in range(n_steps):
        gap = x[k, 1] - x[k, 0]
        drift = a / gap * dt
        x[k + 1, 0] = x[k, 0] - drift + increments[k, 0]
        x[k + 1, 1] = x[k, 1] + drift + increments[k, 1]
        if x[k + 1, 1] - x[k + 1, 0] < gap_floor:
            truncated = True
            last = k
            break

    times = dt * np.arange(last + 1)
    tau = float(times[-1]) if truncated else math.inf
    if truncated:
        logger.warning(f"Pair truncated at t={tau:.4g}: gap below {gap_floor}")
    return PairPath(times, x[: last + 1].copy(), increments[:last].copy(), a, dt, truncated, tau)


def simulate_pair(x1: float, x2: float, a: float, t_end: float, opts: SimOptions,
                  noise: NoiseMode = NoiseMode.INDEPENDENT, path_index: int = 0) -> PairPath:
    """
    Simulate the driving pair with recorded increments.

    Args:
        x1, x2: Starting points, x1 < x2
        a: SLE parameter (> 1/4)
        t_end: Horizon; opts.dt must divide it up to rounding
        opts: Simulation options (dt, gap_floor as the safety floor, seed)
        noise: Independent, mirrored (B^2 = -B^1) or zero Brownian motions
        path_index: Stream index of this run

    Returns:
        PairPath, truncated at tau_floor if the gap falls below the floor
    """
    pair = ChordalPair(x1, x2, a)
    noise = NoiseMode(noise)
    n_steps = expected_steps(t_end, opts.dt)
    increments = _draw_increments(n_steps, opts.dt, opts, noise, path_index)
    path = integrate_pair(pair.x1, pair.x2, a, increments, opts.dt, opts.gap_floor)
    path.metadata.update({"noise": noise.value, "path_index": path_index, **opts.to_dict()})
    return path


def refine_pair_path(path: PairPath, seed: int, path_index: int = 0,
                     gap_floor: Optional[float] = None) -> PairPath:
    """
    Halve the fine step by Brownian-bridge bisection of the recorded increments.

    Every original increment is the sum of its two halves, so the coarse
    Brownian path is unchanged.
    """
    rng = path_generator(seed, path_index, BRIDGE_STREAM)
    halves = bridge_midpoints(path.increments, path.dt, rng)
    refined = np.empty((2 * path.increments.shape[0], 2))
    refined[0::2] = halves[0]
    refined[1::2] = halves[1]
    floor = gap_floor if gap_floor is not None else float(path.metadata.get("gap_floor", 0.02))
    finer = integrate_pair(float(path.x[0, 0]), float(path.x[0, 1]), path.a, refined, 0.5 * path.dt, floor)
    return replace(finer, metadata={**path.metadata, "dt": 0.5 * path.dt})

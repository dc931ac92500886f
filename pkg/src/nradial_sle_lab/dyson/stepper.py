"""
Euler-Maruyama stepping for the n-radial Bessel SDE

    d theta^j = alpha sum_{k != j} cot(theta^j - theta^k) dt + dW^j

with recursive Brownian-bridge refinement near collisions.
"""

import math
from typing import Optional, Tuple

import numpy as np

from ..circle.config import AngleConfig
from ..circle.potentials import cot_sums_array, cyclic_gaps_array, psi_array
from ..utils.rng import BRIDGE_STREAM, bridge_midpoints, path_generator

# Inside the gap floor a substep may move no point by more than this share of
# the smallest gap at either end of the step.
MAX_RELATIVE_MOVE = 0.5


class StepRejectedError(RuntimeError):
    """Raised when a step still breaks ordering after max_substep_depth halvings."""

    def __init__(self, theta: np.ndarray, depth: int):
        self.theta = np.array(theta, dtype=float)
        self.depth = depth
        smallest = float(cyclic_gaps_array(self.theta).min())
        super().__init__(f"Step rejected at substep depth {depth} (min gap {smallest:.3e})")


def accept_proposals(theta: np.ndarray, proposal: np.ndarray, gap_floor: float) -> np.ndarray:
    """
    Decide which proposed updates can be taken as they are.

    A proposal is accepted when every cyclic gap stays positive and either all
    gaps stay above gap_floor or no point moves by more than half of the
    smallest gap at either end of the step.

    Args:
        theta: Current angles, shape (..., n)
        proposal: Proposed angles, same shape
        gap_floor: Gap below which the move size is limited

    Returns:
        Boolean array of shape theta.shape[:-1]
    """
    new_gap = cyclic_gaps_array(proposal).min(axis=-1)
    old_gap = cyclic_gaps_array(theta).min(axis=-1)
    move = np.abs(proposal - theta).max(axis=-1)
    resolved = move <= MAX_RELATIVE_MOVE * np.minimum(old_gap, new_gap)
    return (new_gap > 0) & ((new_gap >= gap_floor) | resolved)


def refine_step(theta: np.ndarray, drift_coefficient: float, dt: float,
                increment: np.ndarray, variance_rate: float, gap_floor: float,
                max_depth: int, rng: np.random.Generator,
                depth: int = 0) -> Tuple[np.ndarray, float, int]:
    """
    Advance one path over dt, halving the step until it can be accepted.

    Args:
        theta: Angles at the start of the step, shape (n,)
        drift_coefficient: Effective alpha (alpha / time_scale)
        dt: Step length
        increment: Brownian increment over the step
        variance_rate: Variance per unit time of each increment coordinate
        gap_floor: Gap below which moves are limited
        max_depth: Maximum number of halvings
        rng: Generator supplying bridge normals
        depth: Current recursion depth

    Returns:
        (angles at the end of the step, trapezoid integral of psi, substeps used)

    Raises:
        StepRejectedError: If max_depth halvings do not produce an accepted step
    """
    proposal = theta + drift_coefficient * cot_sums_array(theta) * dt + increment
    if bool(accept_proposals(theta, proposal, gap_floor)):
        psi_integral = 0.5 * (float(psi_array(theta)) + float(psi_array(proposal))) * dt
        return proposal, psi_integral, 1

    if depth >= max_depth:
        raise StepRejectedError(theta, depth)

    first, second = bridge_midpoints(increment, variance_rate * dt, rng)
    middle, psi_first, count_first = refine_step(theta, drift_coefficient, 0.5 * dt, first,
                                                 variance_rate, gap_floor, max_depth, rng, depth + 1)
    end, psi_second, count_second = refine_step(middle, drift_coefficient, 0.5 * dt, second,
                                                variance_rate, gap_floor, max_depth, rng, depth + 1)
    return end, psi_first + psi_second, count_first + count_second


def step_dyson(cfg: AngleConfig, alpha: float, dt: float, noise: np.ndarray,
               gap_floor: float = 0.02, max_substep_depth: int = 20,
               rng: Optional[np.random.Generator] = None) -> AngleConfig:
    """
    One Euler-Maruyama step of the Bessel SDE.

    Args:
        cfg: Current configuration
        alpha: Drift coefficient
        dt: Step length
        noise: Brownian increments with variance dt per coordinate
        gap_floor: Gap below which the step is refined
        max_substep_depth: Maximum number of halvings
        rng: Generator for bridge normals (a fixed bridge stream when None)

    Returns:
        The configuration after the step, label order kept

    Raises:
        StepRejectedError: If refinement is exhausted
    """
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    noise = np.asarray(noise, dtype=float)
    if noise.shape != (cfg.n,):
        raise ValueError(f"noise must have shape ({cfg.n},), got {noise.shape}")

    bridge_rng = rng if rng is not None else path_generator(0, 0, BRIDGE_STREAM)
    theta, _, _ = refine_step(cfg.array, alpha, dt, noise, 1.0, gap_floor, max_substep_depth, bridge_rng)
    return AngleConfig.from_ordered(theta)


def expected_steps(t_end: float, dt: float) -> int:
    """Number of steps ceil(t_end/dt), tolerant to rounding in t_end/dt."""
    if t_end <= 0:
        return 0
    return int(math.ceil(t_end / dt - 1e-9))

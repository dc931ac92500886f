"""
Continuous and discrete chordal Loewner flows along a recorded driving pair.

The continuous flow solves

    d/dt g_t(z) = a / (g_t(z) - X_t^1) + a / (g_t(z) - X_t^2).

The discrete flow works in blocks of length h. In each block two single-slit
maps of capacity a h are grown from drivers X_hat^j + (B^j - B^j_{kh}) using
the same Brownian increments, then composed. Both composition orders are
computed and averaged, which keeps the scheme symmetric in the two slits.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, Sequence, Tuple

import numpy as np
from loguru import logger

from ..utils.ode import adaptive_rk4
from .pair import PairPath

# Points with imaginary part below this are absorbed.
ABSORB_TOL = 1e-9


@dataclass
class FlowTrajectory:
    """
    Images g_t(z) of evaluation points on a time grid.

    Attributes:
        times: Grid times
        z: Starting points, shape (m,)
        values: g_t(z), shape (len(times), m); nan after absorption
        absorbed_at: T_z per point (inf when never absorbed)
        drivers: Driving points on the same grid, shape (len(times), 2)
        truncated: True when slits met inside a block
        metadata: Scheme details
    """
    times: np.ndarray
    z: np.ndarray
    values: np.ndarray
    absorbed_at: np.ndarray
    drivers: np.ndarray
    truncated: bool = False
    metadata: Dict[str, Any] = field(default_factory=dict)

    def at(self, t: float) -> np.ndarray:
        """Values at the grid time closest to t."""
        return self.values[int(np.argmin(np.abs(self.times - t)))]


def _as_points(z) -> np.ndarray:
    points = np.atleast_1d(np.asarray(z, dtype=complex))
    if np.any(points.imag <= 0):
        raise ValueError("Evaluation points must lie in the upper half plane")
    return points


def two_pole_field(a: float, x1: float, x2: float):
    """a/(g - x1) + a/(g - x2)."""
    def field_(g: np.ndarray) -> np.ndarray:
        return a / (g - x1) + a / (g - x2)
    return field_


def one_pole_field(a: float, x: float):
    """a/(g - x)."""
    def field_(g: np.ndarray) -> np.ndarray:
        return a / (g - x)
    return field_


def _absorb(values: np.ndarray, alive: np.ndarray, absorbed_at: np.ndarray, t: float) -> None:
    lost = alive & ~(values.imag >= ABSORB_TOL)
    absorbed_at[lost] = t
    alive &= ~lost
    values[~alive] = np.nan


def continuous_flow(pair_path: PairPath, z) -> FlowTrajectory:
    """
    RK4 solve of the two-pole Loewner ODE along the recorded pair.

    Drivers are frozen at the midpoint of each fine step.

    Args:
        pair_path: Recorded driving pair
        z: Evaluation point(s) with Im z > 0

    Returns:
        FlowTrajectory on the fine grid
    """
    points = _as_points(z)
    values = points.copy()
    alive = np.ones(points.shape, dtype=bool)
    absorbed_at = np.full(points.shape, np.inf)
    history = np.empty((len(pair_path.times), points.size), dtype=complex)
    history[0] = values

    for k in range(len(pair_path.times) - 1):
        mid = 0.5 * (pair_path.x[k] + pair_path.x[k + 1])
        if np.any(alive):
            new_values, failed = adaptive_rk4(two_pole_field(pair_path.a, mid[0], mid[1]),
                                              values[alive], pair_path.dt)
            new_values[failed] = np.nan
            values[alive] = new_values
        _absorb(values, alive, absorbed_at, float(pair_path.times[k + 1]))
        history[k + 1] = values

    return FlowTrajectory(pair_path.times.copy(), points, history, absorbed_at, pair_path.x.copy(),
                          pair_path.truncated, {"scheme": "continuous", "dt": pair_path.dt})


def _grow_slit(a: float, drivers: np.ndarray, dt: float, points: np.ndarray) -> np.ndarray:
    """Push points through a single-slit chordal flow driven on a fine grid."""
    for k in range(len(drivers) - 1):
        mid = 0.5 * (drivers[k] + drivers[k + 1])
        points, failed = adaptive_rk4(one_pole_field(a, mid), points, dt)
        points[failed] = np.nan
    return points


def compose_block(a: float, hat: np.ndarray, increments: np.ndarray, dt: float,
                  points: np.ndarray, first: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    One block with slit ``first`` grown before the other.

    Returns:
        (images of points, new driver positions X_hat)
    """
    second = 1 - first
    brownian = np.vstack([np.zeros(2), np.cumsum(increments, axis=0)])

    lead = hat[first] + brownian[:, first]
    # Real points carried along: the other slit's base and the test points.
    carried = np.concatenate([[complex(hat[second])], points])
    carried = _grow_slit(a, lead, dt, carried)

    follow = carried[0].real + brownian[:, second]
    tail = np.concatenate([[complex(lead[-1])], carried[1:]])
    tail = _grow_slit(a, follow, dt, tail)

    new_hat = np.empty(2)
    new_hat[first] = tail[0].real
    new_hat[second] = follow[-1]
    return tail[1:], new_hat


def discrete_flow(pair_path: PairPath, z, h: float) -> FlowTrajectory:
    """
    Block-wise commuting approximation with block length h.

    Each block grows the two slits one after the other and composes the maps.
    Slit 1 leads on even blocks and slit 2 on odd blocks.

    Args:
        pair_path: Recorded driving pair (same increments as the continuous flow)
        z: Evaluation point(s) with Im z > 0
        h: Block length, a multiple of the fine step

    Returns:
        FlowTrajectory on the block grid 0, h, 2h, ...
    """
    ratio = h / pair_path.dt
    per_block = int(round(ratio))
    if per_block < 1 or abs(ratio - per_block) > 1e-9 * max(1.0, ratio):
        raise ValueError(f"h={h} must be a positive multiple of the fine step {pair_path.dt}")

    a = pair_path.a
    n_blocks = (len(pair_path.times) - 1) // per_block
    points = _as_points(z)
    values = points.copy()
    alive = np.ones(points.shape, dtype=bool)
    absorbed_at = np.full(points.shape, np.inf)
    hat = pair_path.x[0].copy()
    floor = float(pair_path.metadata.get("gap_floor", 0.0))

    times = [0.0]
    history = [values.copy()]
    drivers = [hat.copy()]
    truncated = False
    for k in range(n_blocks):
        increments = pair_path.increments[k * per_block:(k + 1) * per_block]
        live = values[alive]
        values[alive], hat = compose_block(a, hat, increments, pair_path.dt, live, first=k % 2)

        t = (k + 1) * h
        _absorb(values, alive, absorbed_at, t)
        if not np.all(np.isfinite(hat)) or hat[1] - hat[0] <= floor:
            truncated = True
            logger.warning(f"Discrete flow stopped at t={t:.4g}: slits met")
            break
        times.append(t)
        history.append(values.copy())
        drivers.append(hat.copy())

    return FlowTrajectory(np.array(times), points, np.array(history), absorbed_at, np.array(drivers),
                          truncated or pair_path.truncated, {"scheme": "discrete", "h": h})


def far_field_coefficient(trajectory: FlowTrajectory, index: int = -1, point: int = 0) -> np.ndarray:
    """
    Re[(g_t(z) - z) z] along the trajectory for a point z = iR far away.

    With real drivers g_t(z) = z + 2at/z + c/z^2 + ... and c is real, so on the
    imaginary axis the real part isolates 2at up to O(R^-2).

    Args:
        trajectory: Flow trajectory
        index: Time index (default last)
        point: Column of the far evaluation point
    """
    z = trajectory.z[point]
    return np.real((trajectory.values[index, point] - z) * z)


def expected_far_field(a: float, t: float) -> float:
    """2 a t, the half-plane capacity of both slits at time t."""
    return 2.0 * a * t


def default_grid(u: float, span: float = 3.0, heights: Sequence[float] = (1.5, 2.0, 3.0, 4.0),
                 columns: int = 13) -> np.ndarray:
    """Evaluation grid above height u for discrepancy measurements."""
    xs = np.linspace(-span, span, columns)
    ys = [max(y, u) for y in heights]
    return np.array([x + 1j * y for y in ys for x in xs])


def block_discrepancy(continuous: FlowTrajectory, discrete: FlowTrajectory, u: float,
                      horizon: float) -> float:
    """
    K(u, h): sup |g~_t(z) - g_t(z)| over block times t <= horizon and points
    with Im g_t(z) >= u.

    Args:
        continuous: Continuous flow on the fine grid
        discrete: Discrete flow on the block grid (same points)
        u: Height threshold
        horizon: tau_u ^ 1/u (and the end of the discrete run)

    Returns:
        The supremum, nan when no pair qualifies
    """
    best = -math.inf
    for t, approx in zip(discrete.times, discrete.values):
        if t > horizon + 1e-12:
            break
        index = int(np.argmin(np.abs(continuous.times - t)))
        exact = continuous.values[index]
        usable = np.isfinite(exact) & np.isfinite(approx) & (exact.imag >= u)
        if np.any(usable):
            best = max(best, float(np.abs(approx[usable] - exact[usable]).max()))
    return best if best > -math.inf else math.nan

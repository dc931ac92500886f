"""
Curve tracing by backward Loewner flow.

The tip gamma^j(t) is the preimage of the driver z_t^j. Over the last step
before t the slit grows locally like a chordal slit, so its tip sits at
theta_mid + i sqrt(2 a dt) in covering coordinates at the start of that step;
from there the tip is flowed backward through the earlier steps. Tips of all
times are carried backward together.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Union

import numpy as np
from loguru import logger

from ..circle.config import AngleConfig
from ..dyson.options import SimOptions
from ..utils.ode import adaptive_rk4
from .chain import covering_field
from .drivers import DriverLaw, DrivingPaths, build_chain, generate_driver

# Points whose two backward estimates differ by more than this are flagged.
TRACE_TOLERANCE = 1e-3


@dataclass
class TraceSet:
    """
    Traced curves.

    Attributes:
        times: Recorded times (index 0 is t = 0)
        points: Tips, shape (n, len(times)), complex, |z| <= 1
        accuracy: Estimated error of each tip (0 at t = 0)
        metadata: Driver and tolerance echo
    """
    times: np.ndarray
    points: np.ndarray
    accuracy: np.ndarray
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def n(self) -> int:
        """Number of curves."""
        return int(self.points.shape[0])

    @property
    def flagged(self) -> np.ndarray:
        """Tips whose accuracy estimate exceeds the trace tolerance."""
        return ~(self.accuracy <= TRACE_TOLERANCE)

    def curve(self, j: int) -> np.ndarray:
        """Points of curve j in time order."""
        return self.points[j]

    def to_rows(self) -> List[Dict[str, Any]]:
        """One record per tip: curve_index, t, re, im, accuracy_flag."""
        flagged = self.flagged
        return [
            {
                "curve_index": j,
                "t": float(t),
                "re": float(self.points[j, k].real),
                "im": float(self.points[j, k].imag),
                "accuracy_flag": bool(flagged[j, k]),
            }
            for j in range(self.n)
            for k, t in enumerate(self.times)
        ]


def trace_curves(driving: DrivingPaths, stride: int = 1) -> TraceSet:
    """
    Trace all curves at every stride-th grid time.

    Each tip is computed twice: from the chordal tip estimate over the whole
    last step, and from the estimate over its second half with the first half
    integrated exactly. Their distance is the accuracy estimate.

    Args:
        driving: Driving angles
        stride: Trace every stride-th grid time

    Returns:
        TraceSet with curves starting at exp(2 i theta_0^j)
    """
    if stride < 1:
        raise ValueError("stride must be >= 1")
    chain = build_chain(driving)
    steps = chain.steps
    a = chain.a
    n = chain.n
    traced = list(range(stride, len(steps) + 1, stride))
    wanted = set(traced)

    # Rows of `carried` are (A, B) estimates for each (time index, curve).
    carried = np.empty((0, 2), dtype=complex)
    owners: List[int] = []
    for s in range(len(steps), 0, -1):
        step = steps[s - 1]
        thetas = np.asarray(step.thetas)
        backward = covering_field(a, thetas, -1.0)

        if len(carried):
            flat, failed = adaptive_rk4(backward, carried.ravel(), step.dt)
            flat[failed] = np.nan
            carried = flat.reshape(-1, 2)

        if s in wanted:
            whole = thetas + 1j * math.sqrt(2.0 * a * step.dt)
            half = thetas + 1j * math.sqrt(a * step.dt)
            half, failed = adaptive_rk4(backward, half, 0.5 * step.dt)
            half[failed] = np.nan
            carried = np.concatenate([carried, np.column_stack([whole, half])])
            owners.extend([s] * n)

    start = np.exp(2j * driving.thetas[0])
    times = [0.0] + [float(driving.times[s]) for s in traced]
    points = np.empty((n, len(times)), dtype=complex)
    accuracy = np.zeros((n, len(times)))
    points[:, 0] = start

    column = {s: i + 1 for i, s in enumerate(traced)}
    tips = np.exp(2j * carried)
    for row, s in enumerate(owners):
        j = row % n
        points[j, column[s]] = tips[row, 0]
        accuracy[j, column[s]] = abs(tips[row, 0] - tips[row, 1])

    trace = TraceSet(np.array(times), points, accuracy,
                     {"a": a, "law": driving.law.value, "stride": stride, "tolerance": TRACE_TOLERANCE})
    n_flagged = int(np.count_nonzero(trace.flagged))
    if n_flagged:
        logger.warning(f"{n_flagged} traced points exceed accuracy tolerance {TRACE_TOLERANCE}")
    return trace


def trace_displacement(coarse: TraceSet, fine: TraceSet) -> float:
    """
    Largest distance between tips traced at the same time on two resolutions.

    Every time of ``coarse`` must also be a time of ``fine``. Tips lost to the
    hull on either side are skipped.
    """
    if coarse.n != fine.n:
        raise ValueError(f"curve counts differ: {coarse.n} vs {fine.n}")
    index = np.abs(fine.times[None, :] - coarse.times[:, None]).argmin(axis=1)
    if not np.allclose(fine.times[index], coarse.times, rtol=0.0, atol=1e-9):
        raise ValueError("the finer trace does not contain every time of the coarser one")
    distance = np.abs(coarse.points - fine.points[:, index])
    finite = np.isfinite(distance)
    return float(distance[finite].max()) if finite.any() else math.nan


def self_convergence(law: Union[DriverLaw, str], cfg0: Union[AngleConfig, np.ndarray], a: float,
                     t_end: float, opts: SimOptions, levels: int, stride: int = 1) -> List[Dict[str, float]]:
    """
    Trace displacement under dt -> dt/2, all levels driven by one Brownian path.

    Level l steps with dt / 2^l and sums 2^(levels - l) of the finest
    increments per step; its trace is taken every stride * 2^l steps so all
    levels share their trace times.

    Args:
        law: Driving law
        cfg0: Starting angles
        a: SLE parameter 2/kappa
        t_end: Horizon
        opts: Simulation options at the coarsest level
        levels: Number of halvings
        stride: Trace stride at the coarsest level

    Returns:
        One row per halving: level, dt (of the coarser run), max_displacement
        and scaled_displacement = max_displacement / sqrt(dt)
    """
    if levels < 1:
        raise ValueError(f"levels must be >= 1, got {levels}")
    traces = []
    for level in range(levels + 1):
        level_opts = opts.with_changes(dt=opts.dt / 2 ** level,
                                       noise_substeps=opts.noise_substeps * 2 ** (levels - level))
        driving = generate_driver(law, cfg0, a, t_end, level_opts)
        traces.append(trace_curves(driving, stride=stride * 2 ** level))

    rows = []
    for level in range(1, levels + 1):
        dt = opts.dt / 2 ** (level - 1)
        shift = trace_displacement(traces[level - 1], traces[level])
        rows.append({"level": level, "dt": dt, "max_displacement": shift,
                     "scaled_displacement": shift / math.sqrt(dt)})
        logger.info(f"dt={dt:.3g} -> {dt / 2:.3g}: traces move by at most {shift:.3e}")
    return rows

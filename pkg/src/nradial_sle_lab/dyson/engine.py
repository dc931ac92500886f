"""
Ensemble engine for the n-radial Bessel process.

This module runs many independent paths of the Bessel SDE under P_alpha,
accumulating the integral of psi along each path, and records single paths
for the Loewner drivers.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger

from ..circle.config import AngleConfig
from ..circle.potentials import cot_sums_array, cyclic_gaps_array, psi_array
from ..circle.validator import ConfigValidator
from ..utils.parallel import Mapper, run_batches
from ..utils.rng import BRIDGE_STREAM, START_STREAM, path_generator
from .options import SimOptions
from .stepper import StepRejectedError, accept_proposals, expected_steps, refine_step

# Steps of main-stream noise drawn per generator call.
NOISE_CHUNK = 256

StartLaw = Union[AngleConfig, np.ndarray, Callable[[np.random.Generator, int], np.ndarray]]


@dataclass
class SdePath:
    """
    One recorded path of the Bessel SDE.

    Attributes:
        times: Grid 0 = t_0 < t_1 < ... (last step may be shorter)
        thetas: Angles at each time, shape (len(times), n), labels kept
        alpha: Drift coefficient used
        psi_integral: Running integral of psi, non-decreasing
        substeps: Total accepted substeps (equals the step count without refinement)
    """
    times: np.ndarray
    thetas: np.ndarray
    alpha: float
    psi_integral: np.ndarray
    substeps: int = 0

    @property
    def n(self) -> int:
        """Number of points."""
        return int(self.thetas.shape[1])

    @property
    def configs(self) -> List[AngleConfig]:
        """Canonical configurations along the path."""
        return [AngleConfig.from_ordered(row) for row in self.thetas]

    @property
    def final(self) -> AngleConfig:
        """Configuration at the last recorded time."""
        return AngleConfig.from_ordered(self.thetas[-1])

    def near_collisions(self, threshold: float) -> List[int]:
        """Grid indices where the smallest cyclic gap is below threshold."""
        return ConfigValidator().detect_collisions(self.thetas, threshold)

    def __len__(self) -> int:
        return len(self.times)


@dataclass
class EnsembleResult:
    """
    Outcome of many independent paths started from a common start law.

    Attributes:
        alpha: Drift coefficient used
        t_end: Horizon
        initial: Starting angles, shape (n_paths, n)
        final: Angles at t_end, shape (n_paths, n)
        psi_integral: Integral of psi over [0, t_end] per path
        rejected: True for paths frozen after an exhausted refinement
        substeps: Accepted substeps per path
        snapshot_times: Grid times of the recorded snapshots
        snapshots: Angles at the snapshot times, shape (k, n_paths, n)
        snapshot_psi: Integral of psi up to each snapshot, shape (k, n_paths)
        metadata: Option echo
    """
    alpha: float
    t_end: float
    initial: np.ndarray
    final: np.ndarray
    psi_integral: np.ndarray
    rejected: np.ndarray
    substeps: np.ndarray
    snapshot_times: Tuple[float, ...] = ()
    snapshots: Optional[np.ndarray] = None
    snapshot_psi: Optional[np.ndarray] = None
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def n_paths(self) -> int:
        """Number of simulated paths."""
        return int(self.final.shape[0])

    @property
    def n_rejected(self) -> int:
        """Number of paths frozen by a rejected step."""
        return int(np.count_nonzero(self.rejected))

    @property
    def accepted(self) -> np.ndarray:
        """Mask of paths that completed without rejection."""
        return ~self.rejected

    def snapshot(self, index: int) -> Tuple[float, np.ndarray, np.ndarray]:
        """(time, angles, psi integral) of one snapshot."""
        if self.snapshots is None or self.snapshot_psi is None:
            raise ValueError("No snapshots were recorded")
        return self.snapshot_times[index], self.snapshots[index], self.snapshot_psi[index]


class DysonEngine:
    """
    Monte-Carlo engine for the Bessel SDE.

    This class provides functionality to:
    - Run ensembles of independent paths in fixed batches
    - Record single paths on the full time grid
    - Keep step, substep and rejection counts across runs
    """

    def __init__(self, config: Optional[Dict[str, Any]] = None):
        """
        Initialize the engine.

        Args:
            config: Configuration dictionary; 'alpha' plus any SimOptions field
        """
        self.config = dict(config or {})

        self.alpha = float(self.config.get('alpha', 1.0))
        if not self.alpha > 0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")

        option_fields = SimOptions.__dataclass_fields__.keys()
        self.options = SimOptions(**{k: v for k, v in self.config.items() if k in option_fields})

        if self.alpha < 0.5:
            logger.warning(f"alpha={self.alpha} < 1/2: collisions occur with positive probability")

        self.reset()

    @classmethod
    def from_options(cls, alpha: float, options: SimOptions) -> "DysonEngine":
        """Engine for a given alpha and option set."""
        config: Dict[str, Any] = options.to_dict()
        config['alpha'] = alpha
        return cls(config)

    def reset(self) -> None:
        """Reset run counters."""
        self.runs = 0
        self.total_steps = 0
        self.total_substeps = 0
        self.total_rejected = 0

    @property
    def drift_coefficient(self) -> float:
        """Effective drift alpha / time_scale."""
        return self.alpha / self.options.time_scale

    @property
    def variance_rate(self) -> float:
        """Noise variance per unit time, 1 / time_scale."""
        return 1.0 / self.options.time_scale

    def _start_array(self, start: StartLaw, n_paths: int) -> np.ndarray:
        """Materialise the start law as an (n_paths, n) array."""
        if isinstance(start, AngleConfig):
            return np.tile(start.array, (n_paths, 1))
        if callable(start):
            rng = path_generator(self.options.seed, 0, START_STREAM)
            starts = np.asarray(start(rng, n_paths), dtype=float)
        else:
            starts = np.asarray(start, dtype=float)
        if starts.ndim != 2 or starts.shape[0] != n_paths:
            raise ValueError(f"start configurations must have shape ({n_paths}, n), got {starts.shape}")
        if np.any(cyclic_gaps_array(starts) <= 0):
            raise ValueError("start configurations must be ordered with positive gaps")
        return starts

    def _run_batch(self, bounds: Tuple[int, int], starts: np.ndarray, t_end: float,
                   record_steps: Dict[int, List[int]], n_records: int) -> Dict[str, Any]:
        """Advance paths [lo, hi) over [0, t_end]."""
        lo, hi = bounds
        opts = self.options
        coef = self.drift_coefficient
        rate = self.variance_rate
        fine = opts.noise_substeps

        theta = starts[lo:hi].copy()
        size, n = theta.shape
        generators = [path_generator(opts.seed, i) for i in range(lo, hi)]
        bridges: Dict[int, np.random.Generator] = {}

        psi_now = psi_array(theta)
        integral = np.zeros(size)
        substeps = np.zeros(size, dtype=np.int64)
        rejected = np.zeros(size, dtype=bool)
        snaps = np.empty((n_records, size, n))
        snaps_psi = np.empty((n_records, size))

        def record(step: int) -> None:
            for slot in record_steps.get(step, ()):
                snaps[slot] = theta
                snaps_psi[slot] = integral

        record(0)
        n_steps = expected_steps(t_end, opts.dt)
        step = 0
        while step < n_steps:
            chunk = min(NOISE_CHUNK, n_steps - step)
            normals = np.stack([g.standard_normal((chunk * fine, n)) for g in generators], axis=1)
            for c in range(chunk):
                k = step + c
                h = min(opts.dt, t_end - k * opts.dt)
                if fine == 1:
                    noise = normals[c]
                else:
                    noise = normals[c * fine:(c + 1) * fine].sum(axis=0) / math.sqrt(fine)
                increment = noise * math.sqrt(rate * h)
                proposal = theta + coef * cot_sums_array(theta) * h + increment

                with np.errstate(divide="ignore", invalid="ignore"):
                    ok = accept_proposals(theta, proposal, opts.gap_floor) & ~rejected
                    psi_new = psi_array(proposal)
                integral[ok] += 0.5 * (psi_now[ok] + psi_new[ok]) * h
                theta[ok] = proposal[ok]
                psi_now[ok] = psi_new[ok]
                substeps[ok] += 1

                for p in np.flatnonzero(~ok & ~rejected):
                    if p not in bridges:
                        bridges[p] = path_generator(opts.seed, lo + int(p), BRIDGE_STREAM)
                    try:
                        end, piece, count = refine_step(theta[p], coef, h, increment[p], rate,
                                                        opts.gap_floor, opts.max_substep_depth,
                                                        bridges[p])
                    except StepRejectedError as error:
                        logger.warning(f"Path {lo + int(p)} frozen at t={k * opts.dt:.6g}: {error}")
                        rejected[p] = True
                        continue
                    theta[p] = end
                    integral[p] += piece
                    psi_now[p] = float(psi_array(end))
                    substeps[p] += count

                record(k + 1)
            step += chunk

        logger.debug(
            f"Batch [{lo}, {hi}) done: {int(substeps.sum())} substeps, {int(rejected.sum())} rejected")
        return {
            "final": theta,
            "psi_integral": integral,
            "substeps": substeps,
            "rejected": rejected,
            "snapshots": snaps,
            "snapshot_psi": snaps_psi,
        }

    def _grid_time(self, step: int, t_end: float) -> float:
        return min(step * self.options.dt, t_end)

    def run_ensemble(self, start: StartLaw, t_end: float,
                     record_times: Optional[Sequence[float]] = None,
                     mapper: Optional[Mapper] = None) -> EnsembleResult:
        """
        Simulate options.n_paths independent paths.

        Args:
            start: Fixed configuration, (n_paths, n) array of starts, or a
                sampler called as start(rng, n_paths) with the start stream
            t_end: Horizon (>= 0)
            record_times: Times at which to snapshot all paths; each is taken
                at the first grid time at or after it
            mapper: map-like callable for the batches

        Returns:
            EnsembleResult with per-path outputs in path-index order
        """
        if t_end < 0:
            raise ValueError(f"t_end must be >= 0, got {t_end}")
        n_paths = self.options.n_paths
        starts = self._start_array(start, n_paths)

        requested = sorted(float(t) for t in (record_times or ()))
        if requested and (requested[0] < 0 or requested[-1] > t_end + 1e-12):
            raise ValueError("record_times must lie in [0, t_end]")
        record_steps: Dict[int, List[int]] = {}
        for slot, t in enumerate(requested):
            record_steps.setdefault(expected_steps(t, self.options.dt), []).append(slot)
        return self._collect(starts, t_end, record_steps, len(requested), mapper)

    def _collect(self, starts: np.ndarray, t_end: float, record_steps: Dict[int, List[int]],
                 n_records: int, mapper: Optional[Mapper]) -> EnsembleResult:
        batches = run_batches(
            lambda bounds: self._run_batch(bounds, starts, t_end, record_steps, n_records),
            starts.shape[0], mapper=mapper, batch_size=self.options.batch_size,
        )

        result = EnsembleResult(
            alpha=self.alpha,
            t_end=t_end,
            initial=starts,
            final=np.concatenate([b["final"] for b in batches]),
            psi_integral=np.concatenate([b["psi_integral"] for b in batches]),
            rejected=np.concatenate([b["rejected"] for b in batches]),
            substeps=np.concatenate([b["substeps"] for b in batches]),
            metadata={"alpha": self.alpha, **self.options.to_dict()},
        )
        if n_records:
            slots = sorted((slot, step) for step, slot_list in record_steps.items() for slot in slot_list)
            result.snapshot_times = tuple(self._grid_time(step, t_end) for _, step in slots)
            result.snapshots = np.concatenate([b["snapshots"] for b in batches], axis=1)
            result.snapshot_psi = np.concatenate([b["snapshot_psi"] for b in batches], axis=1)

        self.runs += 1
        self.total_steps += expected_steps(t_end, self.options.dt) * result.n_paths
        self.total_substeps += int(result.substeps.sum())
        self.total_rejected += result.n_rejected
        if result.n_rejected:
            logger.warning(f"{result.n_rejected} of {result.n_paths} paths had a rejected step")
        return result

    def simulate_path(self, cfg0: Union[AngleConfig, np.ndarray], t_end: float,
                      path_index: int = 0) -> SdePath:
        """
        Record one path on the full time grid.

        Args:
            cfg0: Starting configuration (a bare angle array also allows n = 1)
            t_end: Horizon (>= 0)
            path_index: Stream index of the path

        Returns:
            SdePath with ceil(t_end/dt) + 1 entries

        Raises:
            StepRejectedError: If a step is rejected
        """
        if t_end < 0:
            raise ValueError(f"t_end must be >= 0, got {t_end}")
        n_steps = expected_steps(t_end, self.options.dt)
        record_steps = {k: [k] for k in range(n_steps + 1)}

        theta0 = cfg0.array if isinstance(cfg0, AngleConfig) else np.asarray(cfg0, dtype=float)
        starts = np.tile(theta0, (path_index + 1, 1))
        batch = self._run_batch((path_index, path_index + 1), starts, t_end, record_steps, n_steps + 1)
        if batch["rejected"][0]:
            raise StepRejectedError(batch["final"][0], self.options.max_substep_depth)

        self.runs += 1
        self.total_steps += n_steps
        self.total_substeps += int(batch["substeps"][0])
        return SdePath(
            times=np.array([self._grid_time(k, t_end) for k in range(n_steps + 1)]),
            thetas=batch["snapshots"][:, 0, :],
            alpha=self.alpha,
            psi_integral=batch["snapshot_psi"][:, 0],
            substeps=int(batch["substeps"][0]),
        )

    def get_run_summary(self) -> Dict[str, Any]:
        """
        Counters accumulated since the last reset.

        Returns:
            Dictionary with runs, steps, substeps, rejections and the rejection rate
        """
        rate = self.total_rejected / self.total_steps if self.total_steps else 0.0
        return {
            'runs': self.runs,
            'total_steps': self.total_steps,
            'total_substeps': self.total_substeps,
            'total_rejected': self.total_rejected,
            'rejection_rate': rate,
        }


def simulate(cfg0: Union[AngleConfig, np.ndarray], alpha: float, t_end: float,
             opts: SimOptions) -> SdePath:
    """
    Simulate one path of the Bessel SDE under P_alpha.

    Args:
        cfg0: Starting configuration
        alpha: Drift coefficient (collisions are possible below 1/2)
        t_end: Horizon
        opts: Simulation options; path 0 of opts.seed is used

    Returns:
        SdePath with the running integral of psi
    """
    return DysonEngine.from_options(alpha, opts).simulate_path(cfg0, t_end)


def quadratic_variation(path: SdePath) -> np.ndarray:
    """Realised quadratic variation sum (Delta theta^j)^2 of each coordinate."""
    increments = np.diff(path.thetas, axis=0)
    return np.sum(increments ** 2, axis=0)

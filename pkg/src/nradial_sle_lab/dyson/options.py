"""Simulation options shared by every stochastic driver."""

from dataclasses import asdict, dataclass
from typing import Any, Dict

from ..utils.parallel import DEFAULT_BATCH_SIZE


@dataclass(frozen=True)
class SimOptions:
    """
    Time stepping and Monte-Carlo settings.

    Attributes:
        dt: Base time step
        gap_floor: Gap (radians) below which steps are refined
        max_substep_depth: Maximum number of step halvings
        seed: Experiment seed; path i uses the stream keyed (seed, i)
        n_paths: Number of independent paths
        time_scale: 1 for the standard SDE, n for the process theta_{t/n}
        batch_size: Paths per task handed to the mapper
        noise_substeps: Fine Brownian increments summed into each step; a run at
            (dt, 2m) uses the same Brownian path as a run at (dt/2, m)
    """
    dt: float = 1e-3
    gap_floor: float = 0.02
    max_substep_depth: int = 20
    seed: int = 0
    n_paths: int = 1
    time_scale: float = 1.0
    batch_size: int = DEFAULT_BATCH_SIZE
    noise_substeps: int = 1

    def __post_init__(self) -> None:
        """Validate option ranges."""
        if not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if not 0 < self.gap_floor <= 0.1:
            raise ValueError(f"gap_floor must lie in (0, 0.1], got {self.gap_floor}")
        if self.max_substep_depth < 0:
            raise ValueError("max_substep_depth must be >= 0")
        if self.n_paths < 1:
            raise ValueError(f"n_paths must be >= 1, got {self.n_paths}")
        if not self.time_scale > 0:
            raise ValueError("time_scale must be > 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.noise_substeps < 1:
            raise ValueError(f"noise_substeps must be >= 1, got {self.noise_substeps}")

    def with_changes(self, **changes: Any) -> "SimOptions":
        """Copy with some fields replaced."""
        values = asdict(self)
        values.update(changes)
        return SimOptions(**values)

    def to_dict(self) -> Dict[str, Any]:
        """Parameter echo for manifests."""
        return asdict(self)

"""
Experiment manifests.

The manifest hash covers everything that determines the outputs (kind,
parameters, acceptance thresholds, seed, code version) and nothing that does
not (wall-clock time, output paths), so equal hashes mean equal outputs.
"""

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List

from .. import __version__


def jsonable(value: Any) -> Any:
    """Default hook for json.dumps: numpy scalars and arrays, paths, enums."""
    if hasattr(value, "tolist"):
        return value.tolist()
    if hasattr(value, "value"):
        return value.value
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def canonical_json(payload: Any) -> str:
    """Sorted, compact JSON used for hashing."""
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), default=jsonable, ensure_ascii=False)


@dataclass
class ExperimentManifest:
    """
    Everything needed to reproduce one run.

    Attributes:
        kind: Experiment kind
        params: Full parameter echo (defaults included)
        acceptance: Acceptance thresholds in force
        seed: Root seed
        version: Package version
        outputs: Written files, relative to the run directory
        wall_clock_seconds: Elapsed time
        step_counts: Work counters (paths, steps, walks, ...)
        checks: Acceptance outcomes by name
    """
    kind: str
    params: Dict[str, Any]
    acceptance: Dict[str, Any]
    seed: int
    version: str = __version__
    outputs: List[str] = field(default_factory=list)
    wall_clock_seconds: float = 0.0
    step_counts: Dict[str, Any] = field(default_factory=dict)
    checks: Dict[str, bool] = field(default_factory=dict)

    @property
    def identity(self) -> Dict[str, Any]:
        """The fields that determine the outputs."""
        return {"kind": self.kind, "params": self.params, "acceptance": self.acceptance,
                "seed": self.seed, "version": self.version}

    @property
    def hash(self) -> str:
        """sha256 of the identity fields."""
        return hashlib.sha256(canonical_json(self.identity).encode("utf-8")).hexdigest()

    @property
    def hash12(self) -> str:
        """Short hash used to namespace output directories."""
        return self.hash[:12]

    @property
    def run_name(self) -> str:
        return f"{self.kind}-{self.hash12}"

    @property
    def passed(self) -> bool:
        """True when every acceptance check passed."""
        return all(self.checks.values())

    def to_dict(self) -> Dict[str, Any]:
        """Manifest content including the hash."""
        payload = asdict(self)
        payload["hash"] = self.hash
        return payload

    def write(self, path: Path) -> Path:
        """Write the manifest as UTF-8 JSON."""
        try:
            path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True, default=jsonable,
                                       ensure_ascii=False), encoding="utf-8")
        except OSError as e:
            raise OSError(f"Cannot write manifest {path}: {e}") from e
        return path

    @classmethod
    def read(cls, path: Path) -> "ExperimentManifest":
        """Load a manifest written by ``write``."""
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        payload.pop("hash", None)
        return cls(**payload)

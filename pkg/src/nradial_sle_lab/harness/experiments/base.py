"""
Base experiment classes for the harness.

An experiment merges its defaults with the configured parameters, validates
them, runs, and reports tables, a summary and acceptance outcomes. The runner
takes care of writing files.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import pandas as pd

from ...circle.config import AngleConfig
from ...circle.validator import ConfigValidator
from ...dyson.options import SimOptions
from ...utils.parallel import Mapper
from ..config import ConfigValidationError, as_float_list


@dataclass
class ExperimentResult:
    """
    Outputs of one experiment run.

    Attributes:
        tables: Result tables keyed by schema name
        summary: JSON-ready summary values
        checks: Acceptance outcomes by name
        step_counts: Work counters for the manifest
    """
    tables: Dict[str, pd.DataFrame] = field(default_factory=dict)
    summary: Dict[str, Any] = field(default_factory=dict)
    checks: Dict[str, bool] = field(default_factory=dict)
    step_counts: Dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())


class BaseExperiment(ABC):
    """
    Abstract base class for all experiment kinds.

    Subclasses declare ``kind``, ``default_params`` and
    ``default_acceptance`` and implement validation and execution.
    """

    kind: str = ""
    default_params: Dict[str, Any] = {}
    default_acceptance: Dict[str, Any] = {}

    def __init__(self, params: Optional[Dict[str, Any]] = None,
                 acceptance: Optional[Dict[str, Any]] = None, seed: int = 0,
                 mapper: Optional[Mapper] = None):
        """
        Initialize the experiment.

        Args:
            params: Parameters overriding the defaults
            acceptance: Acceptance thresholds overriding the defaults
            seed: Root seed
            mapper: map-like callable handed to the computational modules
        """
        self.params = {**self.default_params, **(params or {})}
        self.acceptance = {"enforce": True, **self.default_acceptance, **(acceptance or {})}
        self.seed = seed
        self.mapper = mapper

        unknown = sorted(set(self.params) - set(self.default_params))
        if unknown:
            raise ConfigValidationError(unknown[0], f"unknown parameter for {self.kind}")
        for key in self.get_required_params():
            if key not in self.params:
                raise ConfigValidationError(key, "missing required parameter")
        self.validate_config(self.params)

    @abstractmethod
    def validate_config(self, params: Dict[str, Any]) -> None:
        """
        Validate experiment parameters.

        Raises:
            ConfigValidationError: If a parameter is invalid
        """

    @abstractmethod
    def get_required_params(self) -> List[str]:
        """Names of parameters that must be present after defaults are applied."""

    @abstractmethod
    def execute(self) -> ExperimentResult:
        """Run the experiment."""

    def sim_options(self, **overrides: Any) -> SimOptions:
        """SimOptions from the common simulation parameters and the root seed."""
        fields = {k: self.params[k] for k in ("dt", "gap_floor", "max_substep_depth", "n_paths",
                                              "time_scale", "batch_size") if k in self.params}
        fields.update(overrides)
        try:
            return SimOptions(seed=self.seed, **fields)
        except ValueError as e:
            raise ConfigValidationError("params", str(e)) from e

    def start_config(self) -> AngleConfig:
        """Starting angles from params 'n' and 'theta0' ("equal" or a comma list)."""
        n, theta0 = self.params["n"], self.params.get("theta0", "equal")
        if str(theta0).strip().lower() == "equal":
            return AngleConfig.equally_spaced(n)
        angles = as_float_list(theta0, "theta0")
        if len(angles) != n:
            raise ConfigValidationError("theta0", f"expected {n} angles, got {len(angles)}")
        floor = float(self.params.get("gap_floor", 0.0))
        if not ConfigValidator(min_gap=floor).validate_angles(angles):
            raise ConfigValidationError(
                "theta0", f"angles must increase strictly, span less than pi and keep gaps above {floor}")
        try:
            return AngleConfig.from_ordered(angles)
        except ValueError as e:
            raise ConfigValidationError("theta0", str(e)) from e

    def threshold(self, name: str) -> float:
        """Acceptance threshold by name."""
        return float(self.acceptance[name])

    def require_positive(self, name: str) -> None:
        """Raise unless params[name] is a positive number."""
        value = self.params[name]
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not value > 0:
            raise ConfigValidationError(name, f"must be > 0, got {value!r}")

    def require_int(self, name: str, minimum: int) -> None:
        """Raise unless params[name] is an integer >= minimum."""
        value = self.params[name]
        if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
            raise ConfigValidationError(name, f"must be an integer >= {minimum}, got {value!r}")

    def __str__(self) -> str:
        return f"{self.__class__.__name__}(kind='{self.kind}')"

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}(kind='{self.kind}', params={self.params})"

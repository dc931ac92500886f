"""Discrete commuting approximation of two-path chordal SLE."""

from typing import Any, Dict, List

import pandas as pd

from ...chordal.convergence import MIN_ORDER, convergence_study
from ...chordal.pair import MIN_A, NoiseMode
from ..config import ConfigValidationError, as_float_list, as_int_list
from .base import BaseExperiment, ExperimentResult


class DiscreteApproxExperiment(BaseExperiment):
    """Median K(u, h) over coupled runs for h = 2^-k, k in h_exponents."""

    kind = "discrete-approx"
    default_params = {
        "kappa": 2.0,
        "u": 1.0,
        "h_exponents": "4, 5, 6, 7, 8, 9",
        "n_runs": 50,
        "start": "-1, 1",
        "noise": NoiseMode.INDEPENDENT.value,
        "gap_floor": 0.02,
        "dt": 2.0 ** -12,
    }
    default_acceptance = {
        "min_order": MIN_ORDER,
        "require_monotone": True,
    }

    def validate_config(self, params: Dict[str, Any]) -> None:
        self.require_positive("kappa")
        self.require_positive("u")
        self.require_int("n_runs", 1)
        if not 2.0 / params["kappa"] > MIN_A:
            raise ConfigValidationError("kappa", f"must satisfy κ < 8, got {params['kappa']}")
        exponents = as_int_list(params["h_exponents"], "h_exponents")
        if len(exponents) < 3 or any(k < 0 for k in exponents):
            raise ConfigValidationError("h_exponents", "need at least three non-negative exponents")
        start = as_float_list(params["start"], "start")
        if len(start) != 2 or not start[0] < start[1]:
            raise ConfigValidationError("start", f"expected 'x1, x2' with x1 < x2, got {params['start']!r}")
        try:
            NoiseMode(params["noise"])
        except ValueError:
            raise ConfigValidationError("noise", f"expected one of {[m.value for m in NoiseMode]}")
        self.sim_options()

    def get_required_params(self) -> List[str]:
        return ["kappa", "u", "h_exponents", "n_runs"]

    def execute(self) -> ExperimentResult:
        h_list = [2.0 ** -k for k in as_int_list(self.params["h_exponents"], "h_exponents")]
        x1, x2 = as_float_list(self.params["start"], "start")
        table = convergence_study(
            float(self.params["u"]), h_list, self.params["n_runs"], self.sim_options(),
            a=2.0 / float(self.params["kappa"]), start=(x1, x2),
            noise=NoiseMode(self.params["noise"]), mapper=self.mapper,
        )
        low, high = table.confidence_interval()
        checks = {"order": table.order >= self.threshold("min_order")}
        if self.acceptance.get("require_monotone", True):
            checks["monotone"] = table.monotone
        return ExperimentResult(
            tables={"approx": pd.DataFrame(table.rows())},
            summary={
                "h": table.h_values.tolist(),
                "median_K": table.median_k.tolist(),
                "order": table.order,
                "order_stderr": table.order_stderr,
                "order_ci95": [low, high],
                "monotone": table.monotone,
                "truncated_runs": int(table.truncated.sum()),
                **table.metadata,
            },
            checks=checks,
            step_counts={"n_runs": self.params["n_runs"], "fine_dt": table.metadata["fine_dt"]},
        )

"""Loewner curve tracing with capacity and boundary-derivative checks."""

import math
from typing import Any, Dict, List

import numpy as np
import pandas as pd
from loguru import logger

from ...circle.config import ModelParams
from ...loewner.chain import boundary_derivative, capacity_report, numeric_boundary_derivative
from ...loewner.drivers import DriverLaw, build_chain, generate_driver
from ...loewner.tracing import self_convergence, trace_curves
from ..config import ConfigValidationError, as_float_list
from .base import BaseExperiment, ExperimentResult

# Boundary test points keep this distance (in covering angle) from every base point.
BOUNDARY_CLEARANCE = 0.25


def boundary_test_points(bases: np.ndarray, count: int, clearance: float = BOUNDARY_CLEARANCE) -> np.ndarray:
    """count covering angles in [0, pi) at least ``clearance`` away from every base (mod pi)."""
    grid = np.linspace(0.0, math.pi, 64 * count, endpoint=False)
    distance = np.abs((grid[:, None] - bases[None, :] + math.pi / 2) % math.pi - math.pi / 2)
    allowed = grid[distance.min(axis=1) >= clearance]
    if allowed.size < count:
        return allowed
    return allowed[np.linspace(0, allowed.size - 1, count).astype(int)]


class LoewnerTraceExperiment(BaseExperiment):
    """Trace n curves from a driver law and verify the map normalization."""

    kind = "loewner-trace"
    default_params = {
        "n": 2,
        "kappa": 4.0,
        "law": DriverLaw.N_RADIAL.value,
        "theta0": "equal",
        "t_end": 1.0,
        "dt": 1e-3,
        "gap_floor": 0.02,
        "max_substep_depth": 20,
        "stride": 10,
        "boundary_points": 10,
        "fd_delta": 1e-4,
        "refine": 0,
    }
    default_acceptance = {
        "capacity_tol": 1e-6,
        "boundary_rel_tol": 1e-4,
    }

    def validate_config(self, params: Dict[str, Any]) -> None:
        self.require_int("n", 1)
        self.require_positive("kappa")
        self.require_positive("t_end")
        self.require_int("stride", 1)
        self.require_int("boundary_points", 1)
        self.require_int("refine", 0)
        try:
            law = DriverLaw(params["law"])
        except ValueError:
            raise ConfigValidationError("law",
                f"expected one of {[m.value for m in DriverLaw]}, got {params['law']!r}")
        if params["kappa"] >= 8:
            raise ConfigValidationError("kappa",
                f"must satisfy κ < 8 for {law.value} drivers, got {params['kappa']}")
        if law is DriverLaw.INDEPENDENT and params["n"] != 2:
            raise ConfigValidationError("n", "the independent law is implemented for n = 2 only")
        self.sim_options()

    def get_required_params(self) -> List[str]:
        return ["n", "kappa", "law", "t_end"]

    def start_angles(self):
        """AngleConfig for n >= 2, a bare angle array for a single curve."""
        if self.params["n"] >= 2:
            return self.start_config()
        theta0 = self.params["theta0"]
        angles = [0.0] if str(theta0).strip().lower() == "equal" else as_float_list(theta0, "theta0")
        if len(angles) != 1:
            raise ConfigValidationError("theta0", f"expected 1 angle, got {len(angles)}")
        return np.array(angles)

    def execute(self) -> ExperimentResult:
        n, kappa = self.params["n"], float(self.params["kappa"])
        law = DriverLaw(self.params["law"])
        a = 2.0 / kappa
        opts = self.sim_options()
        cfg0 = self.start_angles()

        driving = generate_driver(law, cfg0, a, float(self.params["t_end"]), opts)
        trace = trace_curves(driving, stride=self.params["stride"])
        chain = build_chain(driving)

        measured, expected = capacity_report(chain)
        capacity_error = abs(measured - expected)

        zetas = boundary_test_points(np.asarray(driving.thetas[0]), self.params["boundary_points"])
        integral = boundary_derivative(chain, zetas)
        numeric = numeric_boundary_derivative(chain, zetas, float(self.params["fd_delta"]))
        usable = np.isfinite(integral) & np.isfinite(numeric)
        if not np.all(usable):
            logger.warning(f"{int(np.count_nonzero(~usable))} boundary points reached the hull")
        boundary_errors = np.abs(integral[usable] - numeric[usable]) / np.abs(numeric[usable])
        boundary_error = float(boundary_errors.max()) if boundary_errors.size else math.inf

        summary: Dict[str, Any] = {
            "law": law.value,
            "a": a,
            "log_capacity": measured,
            "expected_log_capacity": expected,
            "capacity_error": capacity_error,
            "boundary_points": zetas.tolist(),
            "boundary_max_rel_error": boundary_error,
            "flagged_points": int(np.count_nonzero(trace.flagged)),
            "driver": driving.to_dict(),
        }
        if n >= 2 and law is not DriverLaw.INDEPENDENT:
            params = ModelParams.for_driver(n, kappa, law.value)
            summary.update(alpha=params.alpha, b=params.b, central_charge=params.central_charge)

        tables = {"trace": pd.DataFrame(trace.to_rows())}
        if self.params["refine"]:
            rows = self_convergence(law, cfg0, a, float(self.params["t_end"]), opts, self.params["refine"],
                                    stride=self.params["stride"])
            tables["trace_refinement"] = pd.DataFrame(
                rows, columns=["level", "dt", "max_displacement", "scaled_displacement"])
            summary["refinement"] = rows

        return ExperimentResult(
            tables=tables,
            summary=summary,
            checks={
                "capacity": capacity_error < self.threshold("capacity_tol"),
                "boundary_derivative": boundary_error < self.threshold("boundary_rel_tol"),
            },
            step_counts={"steps": len(chain.steps), "traced_times": len(trace.times)},
        )

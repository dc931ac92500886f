"""Exponential decay of the Feynman-Kac functional."""

from typing import Any, Dict, List

import pandas as pd

from ...circle.config import ModelParams
from ...circle.normalization import IntegrationMethod
from ...dyson.estimators import FeynmanKacMethod, decay_series, expected_decay_intercept, fit_decay_rate
from ..config import ConfigValidationError, as_float_list
from .base import BaseExperiment, ExperimentResult


class DecayFitExperiment(BaseExperiment):
    """Fit log E[exp(-alpha b_alpha int psi)] against t and compare with -2 alpha n beta."""

    kind = "decay-fit"
    default_params = {
        "n": 2,
        "alpha": 0.5,
        "theta0": "equal",
        "times": "1, 1.5, 2, 2.5, 3",
        "method": FeynmanKacMethod.TILTED.value,
        "integration": IntegrationMethod.QUADRATURE.value,
        "n_paths": 100_000,
        "dt": 1e-3,
        "gap_floor": 0.02,
        "max_substep_depth": 20,
        "batch_size": 1024,
    }
    default_acceptance = {
        "slope_rel_tol": 0.05,
        "intercept_rel_tol": 0.10,
    }

    def validate_config(self, params: Dict[str, Any]) -> None:
        self.require_int("n", 2)
        self.require_positive("alpha")
        times = as_float_list(params["times"], "times")
        if len(times) < 3 or any(t <= 0 for t in times):
            raise ConfigValidationError("times", "need at least three positive times")
        for name, enum in (("method", FeynmanKacMethod), ("integration", IntegrationMethod)):
            try:
                enum(params[name])
            except ValueError:
                raise ConfigValidationError(name,
                    f"expected one of {[m.value for m in enum]}, got {params[name]!r}")
        self.sim_options()

    def get_required_params(self) -> List[str]:
        return ["n", "alpha", "times"]

    def execute(self) -> ExperimentResult:
        alpha = float(self.params["alpha"])
        cfg0 = self.start_config()
        opts = self.sim_options()
        model = ModelParams(n=cfg0.n, alpha=alpha)

        points = decay_series(cfg0, alpha, as_float_list(self.params["times"], "times"), opts,
                              method=FeynmanKacMethod(self.params["method"]), mapper=self.mapper)
        fit = fit_decay_rate(points)
        expected_slope = -model.decay_rate
        expected_intercept = expected_decay_intercept(cfg0, alpha,
                                                      method=IntegrationMethod(self.params["integration"]))

        slope_error = abs(fit.slope - expected_slope) / abs(expected_slope)
        intercept_error = abs(fit.intercept - expected_intercept) / abs(expected_intercept)
        table = pd.DataFrame([{"t": t, "mean": e.mean, "std_error": e.std_error} for t, e in points])
        return ExperimentResult(
            tables={"decay": table},
            summary={
                "slope": fit.slope,
                "slope_stderr": fit.slope_stderr,
                "expected_slope": expected_slope,
                "intercept": fit.intercept,
                "expected_intercept": expected_intercept,
                "beta": model.beta,
                "slope_rel_error": slope_error,
                "intercept_rel_error": intercept_error,
            },
            checks={
                "slope": slope_error < self.threshold("slope_rel_tol"),
                "intercept": intercept_error < self.threshold("intercept_rel_tol"),
            },
            step_counts={"n_paths": opts.n_paths, "dt": opts.dt, "n_times": len(points)},
        )

"""Statistical checks of the n-radial Bessel process."""

import math
from typing import Any, Dict, List

import pandas as pd
from loguru import logger

from ...dyson.estimators import (
    FeynmanKacMethod,
    check_martingale_N,
    estimate_feynman_kac,
    step_size_comparison,
)
from ...dyson.stationarity import check_detailed_balance_n2, gap_ks_distance, sample_invariant
from ..config import ConfigValidationError, as_float_list
from .base import BaseExperiment, ExperimentResult

CHECKS = ("martingale", "feynman-kac", "step-size", "stationarity", "detailed-balance")
N2_CHECKS = ("stationarity", "detailed-balance")
# Horizon from which the tilted estimator must have the smaller standard error.
VARIANCE_REDUCTION_T = 2.0


class DysonExperiment(BaseExperiment):
    """
    Martingale flatness, the Feynman-Kac cross-estimator and its step-size
    consistency, stationarity of the gap and binned detailed balance.
    """

    kind = "dyson"
    default_params = {
        "n": 2,
        "alpha": 0.5,
        "theta0": "equal",
        "t": 0.5,
        "fk_times": "0.5, 1, 2",
        "step_t": 1.0,
        "checks": ", ".join(CHECKS),
        "n_paths": 100_000,
        "dt": 1e-3,
        "gap_floor": 0.02,
        "max_substep_depth": 20,
        "time_scale": 1.0,
        "batch_size": 1024,
        "stationary_samples": 1_000_000,
        "stationary_chains": 10_000,
        "burn_in": 20.0,
        "thin": 0.5,
        "db_bins": 40,
        "db_t": 0.1,
        "db_paths": 1_000_000,
        "db_min_count": 100,
    }
    default_acceptance = {
        "n_sigma": 3.0,
        "ks_max": 0.005,
        "step_size_se": 1.0,
    }

    def validate_config(self, params: Dict[str, Any]) -> None:
        self.require_int("n", 2)
        self.require_positive("alpha")
        self.require_positive("t")
        self.require_positive("step_t")
        self.require_int("stationary_samples", 1)
        self.require_int("stationary_chains", 1)
        self.require_int("db_bins", 2)
        self.require_int("db_paths", 1)
        self.require_positive("db_t")
        unknown = [c for c in self.selected_checks() if c not in CHECKS]
        if unknown:
            raise ConfigValidationError("checks",
                f"unknown checks {unknown}; expected some of {list(CHECKS)}")
        if "martingale" in self.selected_checks() and params["alpha"] < 0.25:
            raise ConfigValidationError("alpha",
                f"the martingale check needs alpha >= 1/4, got {params['alpha']}")
        if any(t <= 0 for t in as_float_list(params["fk_times"], "fk_times")):
            raise ConfigValidationError("fk_times", "times must be > 0")
        self.sim_options()

    def get_required_params(self) -> List[str]:
        return ["n", "alpha", "t"]

    def selected_checks(self) -> List[str]:
        return [c.strip() for c in str(self.params["checks"]).split(",") if c.strip()]

    def execute(self) -> ExperimentResult:
        n, alpha = self.params["n"], float(self.params["alpha"])
        cfg0 = self.start_config()
        opts = self.sim_options()
        n_sigma = self.threshold("n_sigma")
        rows: List[Dict[str, Any]] = []
        estimates: List[Dict[str, Any]] = []
        counts: Dict[str, Any] = {}

        for check in self.selected_checks():
            if check in N2_CHECKS and n != 2:
                logger.warning(f"Skipping {check}: implemented for n = 2 only")
                continue
            logger.info(f"Running {check} check (n={n}, alpha={alpha})")

            if check == "martingale":
                t = float(self.params["t"])
                estimate = check_martingale_N(cfg0, alpha, t, opts, mapper=self.mapper)
                z = estimate.z_score(1.0)
                rows.append({"check": "martingale", "statistic": z, "threshold": n_sigma,
                             "passed": z <= n_sigma})
                estimates.append({"quantity": "N_t/N_0", "t": t, **estimate.to_dict()})
                counts["martingale_paths"] = estimate.n_samples

            elif check == "feynman-kac":
                for t in as_float_list(self.params["fk_times"], "fk_times"):
                    direct = estimate_feynman_kac(cfg0, alpha, t, opts, FeynmanKacMethod.DIRECT, self.mapper)
                    tilted = estimate_feynman_kac(cfg0, alpha, t, opts, FeynmanKacMethod.TILTED, self.mapper)
                    combined = (direct.std_error ** 2 + tilted.std_error ** 2) ** 0.5
                    z = abs(direct.mean - tilted.mean) / combined if combined > 0 else 0.0
                    rows.append({"check": f"feynman-kac[t={t}]", "statistic": z, "threshold": n_sigma,
                                 "passed": direct.agrees_with(tilted, n_sigma)})
                    estimates.append({"quantity": "fk_direct", "t": t, **direct.to_dict()})
                    estimates.append({"quantity": "fk_tilted", "t": t, **tilted.to_dict()})
                    if t >= VARIANCE_REDUCTION_T:
                        ratio = tilted.std_error / direct.std_error if direct.std_error > 0 else math.inf
                        rows.append({"check": f"fk-variance[t={t}]", "statistic": ratio, "threshold": 1.0,
                                     "passed": ratio < 1.0})

            elif check == "step-size":
                t = float(self.params["step_t"])
                coarse, fine = step_size_comparison(cfg0, alpha, t, opts, mapper=self.mapper)
                shift = abs(coarse.mean - fine.mean) / fine.std_error if fine.std_error > 0 else 0.0
                limit = self.threshold("step_size_se")
                rows.append({"check": "step_size", "statistic": shift, "threshold": limit,
                             "passed": shift < limit})
                estimates.append({"quantity": "fk_dt", "t": t, **coarse.to_dict()})
                estimates.append({"quantity": "fk_dt_half", "t": t, **fine.to_dict()})

            elif check == "stationarity":
                chain_opts = opts.with_changes(n_paths=self.params["stationary_chains"])
                samples = sample_invariant(2, alpha, float(self.params["burn_in"]),
                                           self.params["stationary_samples"], chain_opts,
                                           thin=float(self.params["thin"]), mapper=self.mapper)
                distance = gap_ks_distance(samples, alpha)
                limit = self.threshold("ks_max")
                rows.append({"check": "stationarity_ks", "statistic": distance, "threshold": limit,
                             "passed": distance < limit})
                counts["stationary_samples"] = len(samples)

            elif check == "detailed-balance":
                db_opts = opts.with_changes(n_paths=self.params["db_paths"])
                result = check_detailed_balance_n2(alpha, float(self.params["db_t"]), self.params["db_bins"],
                                                   db_opts, sigma_level=n_sigma,
                                                   min_count=self.params["db_min_count"], mapper=self.mapper)
                rows.append({"check": "detailed_balance", "statistic": result.max_ratio_error,
                             "threshold": 1.0, "passed": result.passed})
                counts["db_pairs_tested"] = result.pairs_tested
                counts["db_pairs_excluded"] = result.pairs_excluded

        table = pd.DataFrame(rows, columns=["check", "statistic", "threshold", "passed"])
        return ExperimentResult(
            tables={"dyson_checks": table,
                    "estimates": pd.DataFrame(estimates,
                                              columns=["quantity", "t", "mean", "std_error", "n_samples"])},
            summary={"n": n, "alpha": alpha, "checks": table.to_dict(orient="records")},
            checks={r["check"]: bool(r["passed"]) for r in rows},
            step_counts={"n_paths": opts.n_paths, "dt": opts.dt, **counts},
        )

"""Exact-identity suite on random configurations."""

import math
from typing import Any, Dict, List

import numpy as np
import pandas as pd
from loguru import logger

from ...circle.config import AngleConfig, ModelParams
from ...circle.potentials import (
    cot_sums_array,
    drift,
    laplacian_ratio,
    min_gap,
    numerical_derivatives,
    product_F,
    product_F_points,
    psi_array,
    uniform_configs,
)
from ...utils.rng import START_STREAM, path_generator
from ..config import ConfigValidationError, as_float_list
from .base import BaseExperiment, ExperimentResult


def relative_error(approx: np.ndarray, exact: np.ndarray) -> np.ndarray:
    """|approx - exact| / max(|exact|, 1), elementwise."""
    return np.abs(approx - exact) / np.maximum(np.abs(exact), 1.0)


class IdentitySuiteExperiment(BaseExperiment):
    """
    Cotangent identity, finite-difference derivatives of F_alpha, the point
    form of F_alpha and the parameter formulas.
    """

    kind = "identity-suite"
    default_params = {
        "n_min": 2,
        "n_max": 6,
        "n_configs": 10_000,
        "alphas": "0.5, 1, 2",
        "fd_configs": 100,
        "fd_min_gap": 0.1,
        "fd_step": 1e-4,
    }
    default_acceptance = {
        "cot_rel_tol": 1e-9,
        "fd_rel_tol": 1e-4,
        "product_rel_tol": 1e-10,
        "formula_tol": 1e-12,
    }

    def validate_config(self, params: Dict[str, Any]) -> None:
        self.require_int("n_min", 2)
        self.require_int("n_max", params["n_min"])
        self.require_int("n_configs", 1)
        self.require_int("fd_configs", 1)
        self.require_positive("fd_step")
        if not 0 < params["fd_min_gap"] < math.pi / params["n_max"]:
            raise ConfigValidationError("fd_min_gap",
                f"must lie in (0, pi/n_max), got {params['fd_min_gap']}")
        if any(a <= 0 for a in as_float_list(params["alphas"], "alphas")):
            raise ConfigValidationError("alphas", "alpha must be > 0")

    def get_required_params(self) -> List[str]:
        return ["n_min", "n_max", "n_configs", "alphas"]

    def _row(self, check: str, n: int, alpha: float, error: float, threshold: str) -> Dict[str, Any]:
        limit = self.threshold(threshold)
        return {"check": check, "n": n, "alpha": alpha, "max_error": error,
                "threshold": limit, "passed": bool(error < limit)}

    def _spread_configs(self, n: int, size: int, rng: np.random.Generator) -> np.ndarray:
        floor = self.params["fd_min_gap"]
        kept: List[np.ndarray] = []
        while sum(len(k) for k in kept) < size:
            batch = uniform_configs(n, 4 * size, rng)
            gaps = np.diff(np.concatenate([batch, batch[:, :1] + math.pi], axis=1), axis=1)
            kept.append(batch[gaps.min(axis=1) > floor])
        return np.concatenate(kept)[:size]

    def execute(self) -> ExperimentResult:
        alphas = as_float_list(self.params["alphas"], "alphas")
        rows = []
        for n in range(self.params["n_min"], self.params["n_max"] + 1):
            rng = path_generator(self.seed, n, START_STREAM)
            thetas = uniform_configs(n, self.params["n_configs"], rng)
            thetas = thetas[np.array([min_gap(row) for row in thetas]) > 1e-9]
            lhs = np.sum(cot_sums_array(thetas) ** 2, axis=-1)
            rhs = psi_array(thetas) - n * (n ** 2 - 1) / 3.0
            scale = np.maximum(np.maximum(np.abs(lhs), np.abs(rhs)), 1.0)
            cot_error = float(np.max(np.abs(lhs - rhs) / scale))
            rows.append(self._row("cot_identity", n, math.nan, cot_error, "cot_rel_tol"))

            spread = self._spread_configs(n, self.params["fd_configs"], rng)
            configs = [AngleConfig.from_ordered(row) for row in spread]
            for alpha in alphas:
                grad_errors, lap_errors, prod_errors = [], [], []
                for cfg in configs:
                    gradient, laplacian = numerical_derivatives(cfg, alpha, self.params["fd_step"])
                    grad_errors.append(float(relative_error(gradient, drift(cfg, alpha)).max()))
                    exact_laplacian = np.array(laplacian_ratio(cfg, alpha))
                    lap_errors.append(float(relative_error(np.array(laplacian), exact_laplacian)))
                    exact = product_F(cfg, alpha)
                    prod_errors.append(abs(product_F_points(cfg, alpha) - exact) / exact)
                rows.append(self._row("gradient", n, alpha, max(grad_errors), "fd_rel_tol"))
                rows.append(self._row("laplacian", n, alpha, max(lap_errors), "fd_rel_tol"))
                rows.append(self._row("product_points", n, alpha, max(prod_errors), "product_rel_tol"))

        rows.append(self._row("parameter_formulas", 1, math.nan, self._formula_error(), "formula_tol"))
        table = pd.DataFrame(rows)
        checks = {f"{r['check']}[n={r['n']},alpha={r['alpha']}]": r["passed"] for r in rows}
        failed = [name for name, ok in checks.items() if not ok]
        if failed:
            logger.warning(f"Identity checks failed: {failed}")
        summary = {check: float(group["max_error"].max()) for check, group in table.groupby("check")}
        return ExperimentResult(
            tables={"identity_checks": table},
            summary={"max_errors": summary, "n_checks": len(rows)},
            checks=checks,
            step_counts={"configs_per_n": self.params["n_configs"], "fd_configs": self.params["fd_configs"]},
        )

    @staticmethod
    def _formula_error() -> float:
        """Largest deviation of the kappa = 8/3 and kappa = 2 parameter values."""
        restriction = ModelParams.from_kappa(2, 8.0 / 3.0)
        erased = ModelParams.from_kappa(2, 2.0)
        deviations = [
            restriction.central_charge,
            restriction.b - 5.0 / 8.0,
            restriction.b_tilde - 5.0 / 48.0,
            erased.central_charge + 2.0,
        ]
        return float(max(abs(d) for d in deviations))

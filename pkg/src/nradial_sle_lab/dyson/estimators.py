"""
Monte-Carlo checks of the martingale, tilting and decay statements for the
Bessel process.

Under P_alpha,

    N_t = F_alpha(theta_t) exp{alpha^2 n (n^2-1) t / 2} exp{-alpha b_alpha int_0^t psi}

is a martingale, and tilting by N identifies the tilted law with P_{2 alpha}.
The Feynman-Kac functional E_alpha[exp{-alpha b_alpha int psi}] can therefore
be estimated directly under P_alpha or through F_{-alpha}(theta_t) under
P_{2 alpha}, and decays like exp{-2 alpha n beta t}.
"""

import math
from enum import Enum
from typing import Any, Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from ..circle.config import AngleConfig, ModelParams
from ..circle.normalization import normalization_integral
from ..circle.potentials import log_product_F_array, product_F
from ..utils.estimate import Estimate, estimate_from_samples
from ..utils.parallel import Mapper
from .engine import DysonEngine, EnsembleResult
from .options import SimOptions


class FeynmanKacMethod(Enum):
    """Estimator for E_alpha[exp{-alpha b_alpha int psi}]."""
    DIRECT = "direct"
    TILTED = "tilted"


class DecayFit(NamedTuple):
    """Weighted least-squares line through (t, log mean)."""
    slope: float
    intercept: float
    slope_stderr: float


def _metadata(cfg0: AngleConfig, alpha: float, t: float, opts: SimOptions,
              result: Optional[EnsembleResult] = None, **extra: Any) -> Dict[str, Any]:
    metadata: Dict[str, Any] = {"n": cfg0.n, "alpha": alpha, "t": t, "start": list(cfg0.angles)}
    metadata.update(opts.to_dict())
    if result is not None:
        metadata["n_rejected"] = result.n_rejected
    metadata.update(extra)
    return metadata


def martingale_log_ratio(cfg0: AngleConfig, alpha: float, t: float,
                         final: np.ndarray, psi_integral: np.ndarray) -> np.ndarray:
    """log(N_t / N_0) for terminal angles and psi integrals of many paths."""
    params = ModelParams(n=cfg0.n, alpha=alpha)
    n = cfg0.n
    return (log_product_F_array(final, alpha) - log_product_F_array(cfg0.array, alpha)
            + alpha ** 2 * n * (n ** 2 - 1) * t / 2.0
            - alpha * params.b_alpha * psi_integral)


def check_martingale_N(cfg0: AngleConfig, alpha: float, t: float, opts: SimOptions,
                       mapper: Optional[Mapper] = None) -> Estimate:
    """
    Estimate E_alpha[N_t] / N_0, which equals 1.

    Args:
        cfg0: Starting configuration
        alpha: Drift coefficient (>= 1/4)
        t: Time horizon
        opts: Simulation options
        mapper: map-like callable for path batches

    Returns:
        Estimate of the ratio over the paths that completed
    """
    if alpha < 0.25:
        raise ValueError(f"The martingale N_t needs alpha >= 1/4, got {alpha}")
    if t == 0:
        return Estimate(1.0, 0.0, opts.n_paths, _metadata(cfg0, alpha, t, opts))

    result = DysonEngine.from_options(alpha, opts).run_ensemble(cfg0, t, mapper=mapper)
    keep = result.accepted
    values = np.exp(martingale_log_ratio(cfg0, alpha, t, result.final[keep], result.psi_integral[keep]))
    estimate = estimate_from_samples(values, _metadata(cfg0, alpha, t, opts, result))
    logger.info(f"E[N_t]/N_0 (n={cfg0.n}, alpha={alpha}, t={t}): {estimate}")
    return estimate


def direct_samples(alpha: float, result: EnsembleResult, psi_integral: np.ndarray) -> np.ndarray:
    """Per-path exp{-alpha b_alpha int psi} under P_alpha."""
    b_alpha = (3.0 * alpha - 1.0) / 2.0
    return np.exp(-alpha * b_alpha * psi_integral[result.accepted])


def tilted_samples(cfg0: AngleConfig, alpha: float, t: float,
                   result: EnsembleResult, thetas: np.ndarray) -> np.ndarray:
    """Per-path exp{-alpha^2 n(n^2-1)t/2} F_alpha(theta_0) F_{-alpha}(theta_t) under P_{2 alpha}."""
    n = cfg0.n
    log_values = (-alpha ** 2 * n * (n ** 2 - 1) * t / 2.0
                  + log_product_F_array(cfg0.array, alpha)
                  - log_product_F_array(thetas[result.accepted], alpha))
    return np.exp(log_values)


def estimate_feynman_kac(cfg0: AngleConfig, alpha: float, t: float, opts: SimOptions,
                         method: FeynmanKacMethod = FeynmanKacMethod.DIRECT,
                         mapper: Optional[Mapper] = None) -> Estimate:
    """
    Estimate E_alpha[exp{-alpha b_alpha int_0^t psi(theta_s) ds}].

    Args:
        cfg0: Starting configuration
        alpha: Drift coefficient
        t: Time horizon
        opts: Simulation options
        method: DIRECT simulates P_alpha, TILTED simulates P_{2 alpha}
        mapper: map-like callable for path batches

    Returns:
        Estimate of the functional
    """
    method = FeynmanKacMethod(method)
    if t == 0:
        return Estimate(1.0, 0.0, opts.n_paths, _metadata(cfg0, alpha, t, opts, method=method.value))

    if method is FeynmanKacMethod.DIRECT:
        result = DysonEngine.from_options(alpha, opts).run_ensemble(cfg0, t, mapper=mapper)
        values = direct_samples(alpha, result, result.psi_integral)
    else:
        result = DysonEngine.from_options(2.0 * alpha, opts).run_ensemble(cfg0, t, mapper=mapper)
        values = tilted_samples(cfg0, alpha, t, result, result.final)

    estimate = estimate_from_samples(values, _metadata(cfg0, alpha, t, opts, result, method=method.value))
    logger.info(f"Feynman-Kac {method.value} (n={cfg0.n}, alpha={alpha}, t={t}): {estimate}")
    return estimate


def step_size_comparison(cfg0: AngleConfig, alpha: float, t: float, opts: SimOptions,
                         method: FeynmanKacMethod = FeynmanKacMethod.TILTED,
                         mapper: Optional[Mapper] = None) -> Tuple[Estimate, Estimate]:
    """
    Feynman-Kac estimates at opts.dt and opts.dt / 2 on the same Brownian paths.

    The coarse run sums pairs of fine increments, so the two means differ by
    discretisation error only.

    Returns:
        (coarse, fine) estimates
    """
    m = opts.noise_substeps
    coarse = estimate_feynman_kac(cfg0, alpha, t, opts.with_changes(noise_substeps=2 * m), method, mapper)
    fine = estimate_feynman_kac(cfg0, alpha, t, opts.with_changes(dt=opts.dt / 2, noise_substeps=m),
                                method, mapper)
    logger.info(f"Step-size comparison at t={t}: dt={opts.dt} gives {coarse.mean:.6g}, "
                f"dt/2 gives {fine.mean:.6g} (std error {fine.std_error:.3g})")
    return coarse, fine


def decay_series(cfg0: AngleConfig, alpha: float, times: Sequence[float], opts: SimOptions,
                 method: FeynmanKacMethod = FeynmanKacMethod.TILTED,
                 mapper: Optional[Mapper] = None) -> List[Tuple[float, Estimate]]:
    """
    Feynman-Kac estimates at several times from one ensemble.

    The same paths are snapshotted at every time, so the estimates are
    correlated across t.

    Returns:
        List of (grid time, Estimate) in increasing time
    """
    method = FeynmanKacMethod(method)
    times = sorted(float(t) for t in times)
    if not times or times[0] <= 0:
        raise ValueError("decay times must be positive")

    law_alpha = alpha if method is FeynmanKacMethod.DIRECT else 2.0 * alpha
    result = DysonEngine.from_options(law_alpha, opts).run_ensemble(
        cfg0, times[-1], record_times=times, mapper=mapper)

    points = []
    for index in range(len(times)):
        t, thetas, psi_integral = result.snapshot(index)
        if method is FeynmanKacMethod.DIRECT:
            values = direct_samples(alpha, result, psi_integral)
        else:
            values = tilted_samples(cfg0, alpha, t, result, thetas)
        points.append((t, estimate_from_samples(values, _metadata(cfg0, alpha, t, opts, result,
                                                                   method=method.value))))
    return points


def fit_decay_rate(points: Sequence[Tuple[float, Estimate]]) -> DecayFit:
    """
    Weighted least-squares fit of log(mean) against t.

    Weights are 1/sigma^2 with sigma = std_error/mean (delta method); when any
    estimate carries zero error the fit is unweighted and the slope error comes
    from the residuals.

    Args:
        points: At least three (t, Estimate) pairs with increasing t

    Returns:
        DecayFit(slope, intercept, slope_stderr)
    """
    if len(points) < 3:
        raise ValueError(f"fit_decay_rate needs at least 3 points, got {len(points)}")
    t = np.array([p[0] for p in points], dtype=float)
    if np.any(np.diff(t) <= 0):
        raise ValueError("times must be strictly increasing")
    means = np.array([p[1].mean for p in points], dtype=float)
    if np.any(means <= 0):
        raise ValueError("All estimates must have a positive mean to take logarithms")
    errors = np.array([p[1].std_error for p in points], dtype=float)

    y = np.log(means)
    weighted = bool(np.all(errors > 0))
    weights = (means / errors) ** 2 if weighted else np.ones_like(t)

    design = np.column_stack([t, np.ones_like(t)])
    normal = design.T @ (weights[:, None] * design)
    coefficients = np.linalg.solve(normal, design.T @ (weights * y))
    slope, intercept = float(coefficients[0]), float(coefficients[1])

    covariance = np.linalg.inv(normal)
    if not weighted:
        residuals = y - design @ coefficients
        dof = max(len(t) - 2, 1)
        covariance = covariance * float(residuals @ residuals) / dof
    slope_stderr = math.sqrt(max(float(covariance[0, 0]), 0.0))
    return DecayFit(slope, intercept, slope_stderr)


def expected_decay_intercept(cfg0: AngleConfig, alpha: float, **integral_kwargs: Any) -> float:
    """log(F_alpha(theta_0) I_{3 alpha} / I_{4 alpha}), the asymptotic intercept."""
    n = cfg0.n
    ratio = (normalization_integral(n, 3.0 * alpha, **integral_kwargs).mean
             / normalization_integral(n, 4.0 * alpha, **integral_kwargs).mean)
    return math.log(product_F(cfg0, alpha) * ratio)

"""
Normalization integrals I_alpha = int_{X_n} F_alpha(theta) d theta.

F_alpha depends only on the cyclic gaps, so I_alpha is pi times an integral
over the gap simplex {g_1 + ... + g_{n-1} < pi}. n = 2 reduces to a 1-D
integral, n = 3, 4 use tensor Gauss-Legendre on a collapsed (Duffy) map of the
simplex, larger n use stratified Monte-Carlo.
"""

import math
from enum import Enum
from typing import Tuple

import numpy as np
from loguru import logger
from numpy.polynomial.legendre import leggauss
from scipy import integrate

from ..utils.estimate import Estimate
from ..utils.rng import path_generator
from .potentials import log_product_F_array

MAX_QUADRATURE_N = 4
DEFAULT_NODES = 200


class IntegrationMethod(Enum):
    """How to evaluate I_alpha."""
    QUADRATURE = "quadrature"
    MONTE_CARLO = "monte-carlo"


def _gaps_to_angles(gaps: np.ndarray) -> np.ndarray:
    """Angles (0, g1, g1+g2, ...) from the first n-1 gaps."""
    zeros = np.zeros(gaps.shape[:-1] + (1,))
    return np.concatenate([zeros, np.cumsum(gaps, axis=-1)], axis=-1)


def _unit_simplex_rule(m: int, nodes: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Gauss-Legendre rule on {g in R^m_+, sum g < 1} via the collapsed map.

    g_i = u_i prod_{l<i} (1 - u_l), Jacobian prod_i (1 - u_i)^{m-1-i}.
    """
    x, w = leggauss(nodes)
    u1 = 0.5 * (x + 1.0)
    w1 = 0.5 * w

    grids = np.meshgrid(*([u1] * m), indexing="ij")
    weights = np.ones_like(grids[0])
    for wi in np.meshgrid(*([w1] * m), indexing="ij"):
        weights = weights * wi

    gaps = np.empty(grids[0].shape + (m,))
    remaining = np.ones(grids[0].shape)
    for i, u in enumerate(grids):
        gaps[..., i] = remaining * u
        weights = weights * (1.0 - u) ** (m - 1 - i)
        remaining = remaining * (1.0 - u)

    return gaps.reshape(-1, m), weights.ravel()


def _quadrature(n: int, alpha: float, nodes: int) -> float:
    """
    pi * int_0^pi dg_1 int_{simplex of size pi - g_1} F_alpha.

    The outer gap is looped over so only an (n-2)-dimensional rule is ever
    held in memory.
    """
    m = n - 1
    x, w = leggauss(nodes)
    outer_u = 0.5 * (x + 1.0)
    outer_w = 0.5 * math.pi * w
    inner_gaps, inner_weights = _unit_simplex_rule(m - 1, nodes)

    total = 0.0
    for u, weight in zip(outer_u, outer_w):
        first = math.pi * u
        size = math.pi - first
        gaps = np.concatenate([np.full((len(inner_weights), 1), first), size * inner_gaps], axis=1)
        values = np.exp(log_product_F_array(_gaps_to_angles(gaps), alpha))
        total += weight * size ** (m - 1) * float(np.dot(values, inner_weights))
    return math.pi * total


def _monte_carlo(n: int, alpha: float, n_samples: int, seed: int, strata: int = 64) -> Tuple[float, float]:
    """Stratified on the Beta(1, n-1) first gap; the rest is a scaled flat Dirichlet."""
    rng = path_generator(seed, 0)
    per_stratum = max(n_samples // strata, 2)
    volume = math.pi ** (n - 1) / math.factorial(n - 1)

    means = np.empty(strata)
    variances = np.empty(strata)
    for k in range(strata):
        v = (k + rng.uniform(size=per_stratum)) / strata
        first = math.pi * (1.0 - (1.0 - v) ** (1.0 / (n - 1)))
        rest = (math.pi - first)[:, None] * rng.dirichlet(np.ones(n - 1), size=per_stratum)
        gaps = np.concatenate([first[:, None], rest[:, :-1]], axis=1)
        values = np.exp(log_product_F_array(_gaps_to_angles(gaps), alpha))
        means[k] = values.mean()
        variances[k] = values.var(ddof=1)

    scale = math.pi * volume
    mean = scale * means.mean()
    std_error = scale * math.sqrt(float(np.sum(variances / per_stratum))) / strata
    return mean, std_error


def normalization_integral(n: int, alpha: float,
                           method: IntegrationMethod = IntegrationMethod.QUADRATURE,
                           nodes: int = DEFAULT_NODES,
                           n_samples: int = 400_000,
                           seed: int = 0) -> Estimate:
    """
    Estimate I_alpha over X_n.

    Args:
        n: Number of points (>= 2)
        alpha: Exponent (>= 0)
        method: Quadrature (n <= 4) or Monte-Carlo
        nodes: Gauss-Legendre nodes per axis
        n_samples: Monte-Carlo sample count
        seed: Monte-Carlo seed

    Returns:
        Estimate whose std_error is the quadrature error indicator or the
        Monte-Carlo standard error
    """
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    method = IntegrationMethod(method)
    metadata = {"n": n, "alpha": alpha, "requested_method": method.value}

    if method is IntegrationMethod.QUADRATURE and n > MAX_QUADRATURE_N:
        logger.warning(f"No quadrature rule for n={n} > {MAX_QUADRATURE_N}; falling back to Monte-Carlo")
        metadata["fallback"] = "monte-carlo"
        method = IntegrationMethod.MONTE_CARLO

    if method is IntegrationMethod.QUADRATURE and n == 2:
        value, error, info = integrate.quad(lambda x: math.sin(x) ** alpha, 0.0, math.pi,
                                            epsabs=1e-13, epsrel=1e-12, full_output=1)[:3]
        metadata["method"] = "exact-reduction"
        return Estimate(math.pi * value, math.pi * error, int(info["neval"]), metadata)

    if method is IntegrationMethod.QUADRATURE:
        fine = _quadrature(n, alpha, nodes)
        coarse = _quadrature(n, alpha, max(nodes // 2, 2))
        metadata["method"] = "gauss-legendre"
        metadata["nodes"] = nodes
        logger.debug(f"I_{alpha} (n={n}): {fine:.10g}, coarse-rule difference {abs(fine - coarse):.2e}")
        return Estimate(fine, abs(fine - coarse), nodes ** (n - 1), metadata)

    mean, std_error = _monte_carlo(n, alpha, n_samples, seed)
    metadata["method"] = "stratified-monte-carlo"
    metadata["seed"] = seed
    return Estimate(mean, std_error, n_samples, metadata)


def integral_ratio(n: int, numerator_alpha: float, denominator_alpha: float, **kwargs) -> float:
    """I_{numerator} / I_{denominator}, e.g. I_{3 alpha}/I_{4 alpha}."""
    top = normalization_integral(n, numerator_alpha, **kwargs)
    bottom = normalization_integral(n, denominator_alpha, **kwargs)
    return top.mean / bottom.mean

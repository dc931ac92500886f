"""
Exact formulas on the configuration space X_n.

The sine-product potential F_alpha, the cosecant interaction psi, the Bessel
drift and the identities tying them together. Public functions take an
AngleConfig; the ``*_array`` variants work on stacked angle arrays of shape
(..., n) and are what the simulators call.
"""

import math
from typing import Tuple, Union

import numpy as np
from scipy.special import betainc

from .config import DEGENERATE_GAP, AngleConfig, DegenerateConfigError

ArrayLike = Union[np.ndarray, AngleConfig]


def _as_array(cfg: ArrayLike) -> np.ndarray:
    if isinstance(cfg, AngleConfig):
        return cfg.array
    return np.asarray(cfg, dtype=float)


def cyclic_gaps_array(theta: np.ndarray) -> np.ndarray:
    """Cyclic gaps of stacked configurations, shape (..., n)."""
    theta = np.asarray(theta, dtype=float)
    closed = np.concatenate([theta, theta[..., :1] + math.pi], axis=-1)
    return np.diff(closed, axis=-1)


def min_gap(cfg: ArrayLike) -> float:
    """Smallest cyclic gap (0 or negative for degenerate/unordered input)."""
    return float(cyclic_gaps_array(_as_array(cfg)).min())


def sine_gap(cfg: ArrayLike) -> float:
    """d(theta) = min_j |sin(theta^{j+1} - theta^j)| over cyclic neighbours."""
    return float(np.abs(np.sin(cyclic_gaps_array(_as_array(cfg)))).min())


def _pair_differences(theta: np.ndarray) -> np.ndarray:
    """theta^j - theta^k as an (..., n, n) array."""
    return theta[..., :, None] - theta[..., None, :]


def _off_diagonal(n: int) -> np.ndarray:
    return ~np.eye(n, dtype=bool)


def _require_nondegenerate(theta: np.ndarray, operation: str) -> None:
    smallest = float(cyclic_gaps_array(theta).min())
    if smallest < DEGENERATE_GAP:
        raise DegenerateConfigError(smallest, operation)


def cot_sums_array(theta: np.ndarray) -> np.ndarray:
    """
    Sum over k != j of cot(theta^j - theta^k), shape (..., n).

    No collision check: callers guarantee separated points.
    """
    theta = np.asarray(theta, dtype=float)
    n = theta.shape[-1]
    diffs = _pair_differences(theta)
    mask = _off_diagonal(n)
    sines = np.where(mask, np.sin(diffs), 1.0)
    cots = np.where(mask, np.cos(diffs) / sines, 0.0)
    return cots.sum(axis=-1)


def psi_array(theta: np.ndarray) -> np.ndarray:
    """psi = sum_j sum_{k != j} csc^2(theta^j - theta^k) for stacked configs."""
    theta = np.asarray(theta, dtype=float)
    n = theta.shape[-1]
    diffs = _pair_differences(theta)
    mask = _off_diagonal(n)
    sines = np.where(mask, np.sin(diffs), 1.0)
    return np.where(mask, 1.0 / sines ** 2, 0.0).sum(axis=(-2, -1))


def log_product_F_array(theta: np.ndarray, alpha: float) -> np.ndarray:
    """log F_alpha for stacked configs (-inf at collisions)."""
    theta = np.asarray(theta, dtype=float)
    n = theta.shape[-1]
    j, k = np.triu_indices(n, k=1)
    with np.errstate(divide="ignore"):
        logs = np.log(np.abs(np.sin(theta[..., k] - theta[..., j])))
    if alpha == 0:
        return np.zeros(theta.shape[:-1])
    return alpha * logs.sum(axis=-1)


def product_F(cfg: ArrayLike, alpha: float) -> float:
    """
    F_alpha(theta) = prod_{j<k} |sin(theta^k - theta^j)|^alpha.

    Args:
        cfg: Configuration (relaxed, possibly degenerate, input allowed)
        alpha: Exponent >= 0

    Returns:
        The product; 0 for coincident points when alpha > 0
    """
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    theta = _as_array(cfg)
    n = theta.shape[-1]
    j, k = np.triu_indices(n, k=1)
    sines = np.abs(np.sin(theta[k] - theta[j]))
    return float(np.prod(np.power(sines, alpha)))


def product_F_points(cfg: AngleConfig, alpha: float) -> float:
    """F_alpha through the point form: 2^{-alpha n(n-1)/2} prod_{j<k} |z^k - z^j|^alpha."""
    z = cfg.points()
    n = cfg.n
    j, k = np.triu_indices(n, k=1)
    chords = np.abs(z[k] - z[j])
    return float(2.0 ** (-alpha * n * (n - 1) / 2.0) * np.prod(np.power(chords, alpha)))


def psi(cfg: ArrayLike) -> float:
    """
    psi(theta) = 2 sum_{j<k} csc^2(theta^j - theta^k).

    Raises:
        DegenerateConfigError: If two points (nearly) coincide
    """
    theta = _as_array(cfg)
    _require_nondegenerate(theta, "psi")
    return float(psi_array(theta))


def drift(cfg: ArrayLike, alpha: float) -> np.ndarray:
    """
    Bessel drift alpha sum_{k != j} cot(theta^j - theta^k), one entry per point.

    Raises:
        DegenerateConfigError: If two points (nearly) coincide
    """
    theta = _as_array(cfg)
    _require_nondegenerate(theta, "drift")
    return alpha * cot_sums_array(theta)


def check_cot_identity(cfg: ArrayLike) -> Tuple[float, float]:
    """
    Both sides of sum_j (sum_{k != j} cot)^2 = psi - n(n^2 - 1)/3.

    Returns:
        (lhs, rhs)
    """
    theta = _as_array(cfg)
    _require_nondegenerate(theta, "check_cot_identity")
    n = theta.shape[-1]
    lhs = float(np.sum(cot_sums_array(theta) ** 2))
    rhs = float(psi_array(theta)) - n * (n ** 2 - 1) / 3.0
    return lhs, rhs


def laplacian_ratio(cfg: ArrayLike, alpha: float) -> float:
    """Delta F_alpha / F_alpha = -alpha^2 n(n^2-1)/3 + (alpha^2 - alpha) psi."""
    theta = _as_array(cfg)
    _require_nondegenerate(theta, "laplacian_ratio")
    n = theta.shape[-1]
    return -alpha ** 2 * n * (n ** 2 - 1) / 3.0 + (alpha ** 2 - alpha) * float(psi_array(theta))


def numerical_derivatives(cfg: ArrayLike, alpha: float, step: float = 1e-4) -> Tuple[np.ndarray, float]:
    """
    Central-difference grad log F_alpha and Delta F_alpha / F_alpha.

    Both are taken on F_alpha / F_alpha(theta), which is close to 1 near theta.

    Returns:
        (gradient of log F_alpha, Laplacian ratio)
    """
    theta = _as_array(cfg)
    n = theta.shape[-1]
    shifts = step * np.eye(n)
    base = float(log_product_F_array(theta, alpha))
    up = log_product_F_array(theta + shifts, alpha)
    down = log_product_F_array(theta - shifts, alpha)
    gradient = (up - down) / (2.0 * step)
    laplacian = float(np.sum(np.exp(up - base) + np.exp(down - base) - 2.0)) / step ** 2
    return gradient, laplacian


def stationary_density(cfg: ArrayLike, alpha: float, normalizer: float) -> float:
    """f_alpha = F_alpha / I_alpha."""
    if not normalizer > 0:
        raise ValueError("normalizer must be positive")
    return product_F(cfg, alpha) / normalizer


def uniform_configs(n: int, size: int, rng: np.random.Generator) -> np.ndarray:
    """
    Uniform samples from X_n as an array of shape (size, n).

    theta^1 is uniform on [0, pi) and the n cyclic gaps are pi times a flat
    Dirichlet vector.
    """
    first = rng.uniform(0.0, math.pi, size=size)
    gaps = math.pi * rng.dirichlet(np.ones(n), size=size)
    offsets = np.concatenate([np.zeros((size, 1)), np.cumsum(gaps[:, :-1], axis=1)], axis=1)
    return first[:, None] + offsets


def sample_density_rejection(n: int, alpha: float, size: int,
                             rng: np.random.Generator,
                             max_rounds: int = 10_000) -> np.ndarray:
    """
    Exact samples of f_alpha by rejection from the uniform law on X_n.

    F_alpha <= 1 on X_n, so a uniform proposal is accepted with probability
    F_alpha(theta).

    Returns:
        Array of shape (size, n) of ordered angle vectors
    """
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    accepted = []
    remaining = size
    for _ in range(max_rounds):
        if remaining <= 0:
            break
        proposals = uniform_configs(n, max(2 * remaining, 1024), rng)
        weights = np.exp(log_product_F_array(proposals, alpha))
        keep = proposals[rng.uniform(size=len(proposals)) < weights][:remaining]
        accepted.append(keep)
        remaining -= len(keep)
    else:
        if remaining > 0:
            raise RuntimeError(f"Rejection sampler exhausted {max_rounds} rounds")
    return np.concatenate(accepted, axis=0)


def gap_cdf(x: Union[float, np.ndarray], alpha: float) -> np.ndarray:
    """
    CDF on (0, pi) of the density proportional to sin^{2 alpha}(x).

    This is the stationary law of the gap for n = 2.
    """
    x = np.clip(np.asarray(x, dtype=float), 0.0, math.pi)
    shape = alpha + 0.5
    half = 0.5 * betainc(shape, 0.5, np.sin(x) ** 2)
    return np.where(x <= math.pi / 2, half, 1.0 - half)

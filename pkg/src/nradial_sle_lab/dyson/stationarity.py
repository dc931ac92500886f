"""
Stationarity and reversibility of the Bessel process.

The invariant density of the SDE under P_alpha is f_{2 alpha} = F_{2 alpha} /
I_{2 alpha}, and the transition density satisfies detailed balance with
respect to it.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from loguru import logger
from scipy import stats

from ..circle.config import AngleConfig
from ..circle.potentials import gap_cdf, sample_density_rejection
from ..utils.parallel import Mapper
from ..utils.rng import START_STREAM, path_generator
from .engine import DysonEngine
from .options import SimOptions

DEFAULT_BURN_IN = 20.0
DEFAULT_THIN = 0.5


def canonical_rows(thetas: np.ndarray) -> np.ndarray:
    """Shift each row by a multiple of pi so its first angle lies in [0, pi)."""
    thetas = np.asarray(thetas, dtype=float)
    shifts = math.pi * np.floor(thetas[..., :1] / math.pi)
    return thetas - shifts


def sample_invariant(n: int, alpha: float, burn_in: float, n_samples: int, opts: SimOptions,
                     thin: float = DEFAULT_THIN, mapper: Optional[Mapper] = None) -> np.ndarray:
    """
    Thinned samples of the stationary law from opts.n_paths parallel chains.

    Every chain starts at equal spacing, runs for burn_in, then is sampled
    every thin time units.

    Args:
        n: Number of points
        alpha: Drift coefficient (>= 1/2)
        burn_in: Time discarded before sampling
        n_samples: Number of samples returned
        opts: Simulation options (n_paths is the number of chains)
        thin: Time between samples of one chain
        mapper: map-like callable for chain batches

    Returns:
        Array of shape (n_samples, n), one canonical configuration per row
    """
    if alpha < 0.5:
        raise ValueError(f"sample_invariant needs alpha >= 1/2, got {alpha}")
    if burn_in < 0 or not thin > 0 or n_samples < 1:
        raise ValueError("burn_in must be >= 0, thin > 0 and n_samples >= 1")

    per_chain = int(math.ceil(n_samples / opts.n_paths))
    times = [burn_in + thin * k for k in range(per_chain)]
    engine = DysonEngine.from_options(alpha, opts)
    result = engine.run_ensemble(AngleConfig.equally_spaced(n), times[-1], record_times=times, mapper=mapper)

    if result.snapshots is None:
        raise RuntimeError("Ensemble returned no snapshots")
    samples = result.snapshots[:, result.accepted, :].reshape(-1, n)[:n_samples]
    if len(samples) < n_samples:
        logger.warning(f"Only {len(samples)} of {n_samples} samples available after rejections")
    logger.info(f"Sampled {len(samples)} configurations from {opts.n_paths} chains (n={n}, alpha={alpha})")
    return canonical_rows(samples)


def first_gaps(samples: np.ndarray) -> np.ndarray:
    """theta^2 - theta^1 for each row."""
    samples = np.asarray(samples, dtype=float)
    return samples[:, 1] - samples[:, 0]


def gap_ks_distance(samples: np.ndarray, alpha: float) -> float:
    """
    Kolmogorov-Smirnov distance of the n = 2 gap against sin^{2 alpha}.

    Args:
        samples: Array of shape (m, 2)
        alpha: Drift coefficient of the chain that produced them
    """
    result = stats.kstest(first_gaps(samples), lambda x: gap_cdf(x, alpha))
    return float(result.statistic)


def compare_gap_marginal(samples: np.ndarray, alpha: float, oracle_size: int = 100_000,
                         seed: int = 0) -> Tuple[float, float]:
    """
    Two-sample KS test of theta^2 - theta^1 against exact draws of f_{2 alpha}.

    Returns:
        (statistic, p-value)
    """
    n = samples.shape[1]
    rng = path_generator(seed, 0, START_STREAM)
    oracle = sample_density_rejection(n, 2.0 * alpha, oracle_size, rng)
    result = stats.ks_2samp(first_gaps(samples), first_gaps(oracle))
    return float(result.statistic), float(result.pvalue)


@dataclass
class DetailedBalanceResult:
    """
    Binned detailed-balance test for n = 2.

    Attributes:
        max_ratio_error: Largest |P(i->j) w(i) - P(j->i) w(j)| over tested pairs,
            in units of sigma_level standard errors (<= 1 passes)
        pairs_tested: Number of bin pairs with enough transitions both ways
        pairs_excluded: Number of off-diagonal pairs skipped for low counts
        counts: Transition counts, counts[i, j] from bin i to bin j
        weights: Stationary bin masses w
        metadata: Parameter echo
    """
    max_ratio_error: float
    pairs_tested: int
    pairs_excluded: int
    counts: np.ndarray
    weights: np.ndarray
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        """True when every tested pair lies within tolerance."""
        return self.pairs_tested > 0 and self.max_ratio_error <= 1.0

    @property
    def transition_matrix(self) -> np.ndarray:
        """Row-normalised counts (rows with no starts are zero)."""
        totals = self.counts.sum(axis=1, keepdims=True)
        return np.divide(self.counts, totals, out=np.zeros_like(self.counts, dtype=float),
                         where=totals > 0)

    def row_deviation(self) -> float:
        """Largest |P(i->j) - w(j)| over populated rows."""
        populated = self.counts.sum(axis=1) > 0
        return float(np.abs(self.transition_matrix[populated] - self.weights[None, :]).max())


def bin_weights(n_bins: int, alpha: float) -> np.ndarray:
    """Stationary mass of each of n_bins equal gap bins on (0, pi)."""
    edges = np.linspace(0.0, math.pi, n_bins + 1)
    return np.diff(gap_cdf(edges, alpha))


def check_detailed_balance_n2(alpha: float, t: float, n_bins: int, opts: SimOptions,
                              sigma_level: float = 3.0, min_count: int = 100,
                              mapper: Optional[Mapper] = None) -> DetailedBalanceResult:
    """
    Test p_t(x, y) f(x) = p_t(y, x) f(y) on the n = 2 gap coordinate.

    Starts are drawn from the stationary law, each path contributes one
    transition over time t.

    Args:
        alpha: Drift coefficient
        t: Transition time
        n_bins: Number of equal gap bins on (0, pi)
        opts: Simulation options (n_paths transitions)
        sigma_level: Tolerance in standard errors
        min_count: Minimum transitions each way for a pair to be tested
        mapper: map-like callable for path batches

    Returns:
        DetailedBalanceResult
    """
    if n_bins < 2:
        raise ValueError("n_bins must be >= 2")
    if not t > 0:
        raise ValueError("t must be > 0")

    def stationary_starts(rng: np.random.Generator, size: int) -> np.ndarray:
        return sample_density_rejection(2, 2.0 * alpha, size, rng)

    result = DysonEngine.from_options(alpha, opts).run_ensemble(stationary_starts, t, mapper=mapper)
    keep = result.accepted
    start_gaps = first_gaps(result.initial[keep])
    end_gaps = first_gaps(result.final[keep])

    edges = np.linspace(0.0, math.pi, n_bins + 1)
    start_bins = np.clip(np.digitize(start_gaps, edges) - 1, 0, n_bins - 1)
    end_bins = np.clip(np.digitize(end_gaps, edges) - 1, 0, n_bins - 1)
    counts = np.zeros((n_bins, n_bins), dtype=np.int64)
    np.add.at(counts, (start_bins, end_bins), 1)

    weights = bin_weights(n_bins, alpha)
    totals = counts.sum(axis=1)

    errors: List[float] = []
    excluded = 0
    for i in range(n_bins):
        for j in range(i + 1, n_bins):
            if counts[i, j] < min_count or counts[j, i] < min_count:
                excluded += 1
                continue
            p_ij = counts[i, j] / totals[i]
            p_ji = counts[j, i] / totals[j]
            difference = abs(p_ij * weights[i] - p_ji * weights[j])
            variance = (weights[i] ** 2 * p_ij * (1 - p_ij) / totals[i]
                        + weights[j] ** 2 * p_ji * (1 - p_ji) / totals[j])
            errors.append(difference / (sigma_level * math.sqrt(variance)))

    if excluded:
        logger.warning(f"Detailed balance: {excluded} bin pairs excluded (< {min_count} transitions)")

    report = DetailedBalanceResult(
        max_ratio_error=max(errors) if errors else 0.0,
        pairs_tested=len(errors),
        pairs_excluded=excluded,
        counts=counts,
        weights=weights,
        metadata={"alpha": alpha, "t": t, "n_bins": n_bins, "sigma_level": sigma_level,
                  "min_count": min_count, "n_rejected": result.n_rejected, **opts.to_dict()},
    )
    logger.info(f"Detailed balance: max error {report.max_ratio_error:.3f} over {report.pairs_tested} pairs")
    return report

"""
Tests for the chordal driving pair, its Loewner flows and the convergence study.
"""

import math
import sys
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

# Add src to path for imports
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', '..', 'src'))

from nradial_sle_lab.chordal.convergence import (
    InsufficientDataError,
    OrderBelowMinimumError,
    convergence_study,
    expected_min_ratio,
    fit_order,
)
from nradial_sle_lab.chordal.flows import (
    block_discrepancy,
    continuous_flow,
    default_grid,
    compose_block,
    discrete_flow,
    expected_far_field,
    far_field_coefficient,
)
from nradial_sle_lab.chordal.pair import (
    ChordalPair,
    NoiseMode,
    integrate_pair,
    refine_pair_path,
    simulate_pair,
)
from nradial_sle_lab.dyson.options import SimOptions


class TestChordalPair:
    """Test the driving pair."""

    def test_validation(self):
        """Test ordering and the kappa < 8 bound."""
        assert ChordalPair(-1.0, 1.0, 1.0).gap == 2.0
        with pytest.raises(ValueError, match="x1 < x2"):
            ChordalPair(1.0, -1.0, 1.0)
        with pytest.raises(ValueError, match="kappa < 8"):
            ChordalPair(-1.0, 1.0, 0.25)

    def test_zero_noise_gap_law(self):
        """Test Z^2 = Z_0^2 + 4 a t without noise."""
        path = simulate_pair(-1.0, 1.0, 1.0, 1.0, SimOptions(dt=1e-4), noise=NoiseMode.ZERO)
        assert len(path.times) == 10_001
        assert path.gaps[-1] ** 2 == pytest.approx(4.0 + 4.0, rel=1e-3)
        np.testing.assert_allclose(path.x.sum(axis=1), 0.0, atol=1e-12)
        assert not path.truncated
        assert math.isinf(path.tau)

    def test_mirrored_noise_keeps_centre(self):
        """Test that B^2 = -B^1 keeps x1 + x2 fixed."""
        path = simulate_pair(-1.0, 1.0, 1.0, 0.5, SimOptions(dt=1e-3, seed=2), noise="mirrored")
        np.testing.assert_allclose(path.x.sum(axis=1), 0.0, atol=1e-10)
        np.testing.assert_allclose(path.increments[:, 0], -path.increments[:, 1])

    def test_independent_runs_reproducible(self):
        """Test that a run index fixes the Brownian path."""
        opts = SimOptions(dt=1e-3, seed=4)
        first = simulate_pair(-1.0, 1.0, 1.0, 0.2, opts, path_index=3)
        second = simulate_pair(-1.0, 1.0, 1.0, 0.2, opts, path_index=3)
        other = simulate_pair(-1.0, 1.0, 1.0, 0.2, opts, path_index=4)
        np.testing.assert_array_equal(first.x, second.x)
        assert not np.array_equal(first.x, other.x)
        assert first.metadata["path_index"] == 3

    def test_truncation_below_floor(self):
        """Test that a gap below the floor stops the path."""
        path = integrate_pair(-1.0, 1.0, 1.0, np.zeros((10, 2)), 0.01, 2.5)
        assert path.truncated
        assert path.tau == 0.0
        assert len(path.times) == 1
        assert path.increments.shape == (0, 2)

    def test_first_time_gap_below(self):
        """Test tau_u on a shrinking gap."""
        increments = np.tile([0.1, -0.1], (10, 1))
        path = integrate_pair(-1.0, 1.0, 0.3, increments, 1e-6, 0.01)
        assert path.first_time_gap_below(0.9) == pytest.approx(6e-6)
        assert math.isinf(path.first_time_gap_below(0.001))

    def test_refinement_preserves_coarse_increments(self):
        """Test that bridge refinement keeps every coarse increment."""
        path = simulate_pair(-1.0, 1.0, 1.0, 0.1, SimOptions(dt=0.01, seed=1))
        finer = refine_pair_path(path, seed=1)
        assert finer.dt == pytest.approx(0.005)
        assert len(finer.times) == 2 * len(path.times) - 1
        np.testing.assert_allclose(finer.increments[0::2] + finer.increments[1::2], path.increments)


class TestFlows:
    """Test the continuous and discrete flows."""

    def setup_method(self):
        """Set up a deterministic pair."""
        self.path = simulate_pair(-1.0, 1.0, 1.0, 1.0, SimOptions(dt=2.0 ** -8), noise=NoiseMode.ZERO)

    def test_points_must_be_in_upper_half_plane(self):
        """Test evaluation point validation."""
        with pytest.raises(ValueError, match="upper half plane"):
            continuous_flow(self.path, [1.0 + 0j])

    def test_continuous_far_field(self):
        """Test the capacity 2 a t read off far away."""
        trajectory = continuous_flow(self.path, [100j, 1j])
        assert far_field_coefficient(trajectory) == pytest.approx(expected_far_field(1.0, 1.0), abs=1e-3)
        assert trajectory.values.shape == (257, 2)
        np.testing.assert_allclose(trajectory.at(0.0), [100j, 1j])

    def test_discrete_far_field(self):
        """Test that each block adds capacity 2 a h."""
        trajectory = discrete_flow(self.path, [100j], 2.0 ** -4)
        assert len(trajectory.times) == 17
        assert trajectory.times[-1] == pytest.approx(1.0)
        assert far_field_coefficient(trajectory) == pytest.approx(2.0, abs=1e-3)

    def test_discrete_blocks_compose_in_alternating_order(self):
        """Test that each block is one composition, slit 1 first on even blocks."""
        path = simulate_pair(-1.0, 1.0, 1.0, 0.5, SimOptions(dt=2.0 ** -8, seed=7))
        points = np.array([0.3 + 1.0j, -0.7 + 2.0j])
        trajectory = discrete_flow(path, points, 0.25)

        first_images, first_hat = compose_block(1.0, path.x[0], path.increments[:64], path.dt,
                                                points, first=0)
        second_images, second_hat = compose_block(1.0, first_hat, path.increments[64:128], path.dt,
                                                  first_images, first=1)
        np.testing.assert_allclose(trajectory.values[1], first_images, rtol=1e-14)
        np.testing.assert_allclose(trajectory.drivers[1], first_hat, rtol=1e-14)
        np.testing.assert_allclose(trajectory.values[2], second_images, rtol=1e-14)
        np.testing.assert_allclose(trajectory.drivers[2], second_hat, rtol=1e-14)

        reversed_images, _ = compose_block(1.0, path.x[0], path.increments[:64], path.dt, points, first=1)
        assert not np.allclose(trajectory.values[1], reversed_images, rtol=0.0, atol=1e-12)

    def test_discrete_block_must_be_multiple_of_fine_step(self):
        """Test block length validation."""
        with pytest.raises(ValueError, match="multiple"):
            discrete_flow(self.path, [1j], 1.5 * 2.0 ** -8)

    def test_discrepancy_shrinks_with_h(self):
        """Test that finer blocks track the continuous flow more closely."""
        grid = default_grid(1.0, columns=5)
        exact = continuous_flow(self.path, grid)
        values = [block_discrepancy(exact, discrete_flow(self.path, grid, 2.0 ** -k), 1.0, 1.0)
                  for k in (3, 4, 5)]
        assert values[0] > values[1] > values[2] > 0

    def test_default_grid_above_threshold(self):
        """Test that grid points lie at height >= u."""
        grid = default_grid(2.5, columns=3)
        assert grid.shape == (12,)
        assert np.all(grid.imag >= 2.5)


class TestConvergence:
    """Test the convergence study."""

    def test_fit_order(self):
        """Test the slope of an exact power law."""
        h = np.array([0.25, 0.125, 0.0625])
        order, stderr = fit_order(h, 3.0 * h ** 0.8)
        assert order == pytest.approx(0.8)
        assert stderr == pytest.approx(0.0, abs=1e-9)
        with pytest.raises(InsufficientDataError):
            fit_order(h, np.array([1.0, np.nan, 0.5]))

    def test_study_on_deterministic_pair(self):
        """Test a zero-noise study: decreasing medians and a positive order."""
        opts = SimOptions(dt=2.0 ** -8, gap_floor=0.02, seed=0)
        with ThreadPoolExecutor(max_workers=2) as pool:
            table = convergence_study(1.0, [2.0 ** -5, 2.0 ** -3, 2.0 ** -4], 2, opts,
                                      noise=NoiseMode.ZERO, grid=default_grid(1.0, columns=5),
                                      mapper=pool.map)
        np.testing.assert_allclose(table.h_values, [2.0 ** -3, 2.0 ** -4, 2.0 ** -5])
        assert table.monotone
        assert table.order > 0.3
        assert table.metadata["fine_dt"] == 2.0 ** -8
        assert len(table.rows()) == 3 * 2
        low, high = table.confidence_interval()
        assert low <= table.order <= high

    def test_fine_step_falls_back_when_dt_does_not_divide(self):
        """Test that the fine step becomes min(h)/8."""
        opts = SimOptions(dt=0.003)
        table = convergence_study(1.0, [2.0 ** -3, 2.0 ** -4, 2.0 ** -5], 1, opts, noise="zero",
                                  grid=default_grid(1.0, columns=3))
        assert table.metadata["fine_dt"] == pytest.approx(2.0 ** -8)

    def test_runs_starting_inside_threshold_are_unusable(self):
        """Test that a gap already below u leaves nothing to measure."""
        with pytest.raises(InsufficientDataError):
            convergence_study(1.0, [0.25, 0.125, 0.0625], 2, SimOptions(dt=2.0 ** -6),
                              start=(-0.2, 0.2), noise=NoiseMode.ZERO)

    def test_min_order_raises(self, mocker):
        """Test that a fitted order under min_order fails the study and a warning-only run does not."""
        mocker.patch("nradial_sle_lab.chordal.convergence.run_discrepancies",
                     return_value=(np.array([0.5, 0.45, 0.4]), 0))
        h_list = [0.25, 0.125, 0.0625]
        table = convergence_study(1.0, h_list, 2, SimOptions(dt=2.0 ** -6))
        assert table.order < 0.3
        with pytest.raises(OrderBelowMinimumError, match="below the required 0.3"):
            convergence_study(1.0, h_list, 2, SimOptions(dt=2.0 ** -6), min_order=0.3)

    def test_argument_validation(self):
        """Test u, n_runs and h_list checks."""
        with pytest.raises(ValueError, match="u must be"):
            convergence_study(0.0, [0.1, 0.05, 0.025], 1, SimOptions())
        with pytest.raises(ValueError, match="n_runs"):
            convergence_study(1.0, [0.1, 0.05, 0.025], 0, SimOptions())
        with pytest.raises(ValueError, match="three"):
            convergence_study(1.0, [0.1, 0.05], 1, SimOptions())

    def test_expected_min_ratio(self):
        """Test the doubling factor of the minimum order."""
        assert expected_min_ratio() == pytest.approx(2.0 ** 0.3)

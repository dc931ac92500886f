"""
Tests for the normalization integrals.
"""

import math
import sys
import os

import pytest

# Add src to path for imports
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', '..', 'src'))

from nradial_sle_lab.circle.normalization import IntegrationMethod, integral_ratio, normalization_integral


class TestNormalizationIntegral:
    """Test I_alpha over X_n."""

    def test_two_points_closed_forms(self):
        """Test I_0 = pi^2, I_1 = 2 pi and I_2 = pi^2/2 for n = 2."""
        assert normalization_integral(2, 0.0).mean == pytest.approx(math.pi ** 2)
        assert normalization_integral(2, 1.0).mean == pytest.approx(2 * math.pi)
        assert normalization_integral(2, 2.0).mean == pytest.approx(math.pi ** 2 / 2)

    def test_volume_of_three_point_space(self):
        """Test that I_0 is the volume pi^3/2 of X_3."""
        estimate = normalization_integral(3, 0.0, nodes=20)
        assert estimate.mean == pytest.approx(math.pi ** 3 / 2, rel=1e-12)
        assert estimate.metadata["method"] == "gauss-legendre"

    def test_quadrature_and_monte_carlo_agree(self):
        """Test the two methods on n = 3."""
        quad = normalization_integral(3, 1.0, nodes=80)
        mc = normalization_integral(3, 1.0, method=IntegrationMethod.MONTE_CARLO, n_samples=200_000, seed=3)
        assert abs(quad.mean - mc.mean) < 5 * mc.std_error + quad.std_error

    def test_large_n_falls_back_to_monte_carlo(self):
        """Test the fallback above the quadrature limit."""
        estimate = normalization_integral(5, 1.0, n_samples=20_000)
        assert estimate.metadata["fallback"] == "monte-carlo"
        assert estimate.std_error > 0

    def test_monte_carlo_volume(self):
        """Test that Monte-Carlo integrates the constant exactly."""
        estimate = normalization_integral(4, 0.0, method="monte-carlo", n_samples=10_000)
        assert estimate.mean == pytest.approx(math.pi ** 4 / 6, rel=1e-12)

    def test_invalid_arguments(self):
        """Test input validation."""
        with pytest.raises(ValueError, match="n must be"):
            normalization_integral(1, 1.0)
        with pytest.raises(ValueError, match="alpha must be"):
            normalization_integral(2, -0.5)

    def test_integral_ratio(self):
        """Test the ratio helper on n = 2 closed forms."""
        assert integral_ratio(2, 1.0, 2.0) == pytest.approx(4.0 / math.pi)

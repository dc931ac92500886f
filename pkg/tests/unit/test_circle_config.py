"""
Tests for configuration-space types and model parameters.
"""

import math
import sys
import os

import numpy as np
import pytest

# Add src to path for imports
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', '..', 'src'))

from nradial_sle_lab.circle.config import AngleConfig, DegenerateConfigError, ModelParams


class TestAngleConfig:
    """Test cases for AngleConfig."""

    def test_valid_config_is_stored_as_floats(self):
        """Test that a valid ordered tuple is accepted as is."""
        cfg = AngleConfig((0, 1, 2))
        assert cfg.angles == (0.0, 1.0, 2.0)
        assert cfg.n == 3
        assert cfg.strict

    def test_rejects_single_point(self):
        """Test that n = 1 is not a configuration."""
        with pytest.raises(ValueError, match="n >= 2"):
            AngleConfig((0.5,))

    def test_rejects_unordered_angles(self):
        """Test that decreasing angles are rejected rather than sorted."""
        with pytest.raises(ValueError, match="strictly increasing"):
            AngleConfig((1.0, 0.5))

    def test_rejects_span_of_pi(self):
        """Test that the last angle must stay below theta^1 + pi."""
        with pytest.raises(ValueError, match="must be < pi"):
            AngleConfig((0.0, math.pi))

    def test_rejects_first_angle_outside_fundamental_interval(self):
        """Test that theta^1 must lie in [0, pi)."""
        with pytest.raises(ValueError, match="theta\\^1"):
            AngleConfig((4.0, 5.0))

    def test_rejects_non_finite(self):
        """Test that nan angles are rejected."""
        with pytest.raises(ValueError, match="finite"):
            AngleConfig((0.0, float("nan")))

    def test_from_ordered_shifts_by_multiple_of_pi(self):
        """Test that from_ordered moves theta^1 into [0, pi) keeping labels."""
        cfg = AngleConfig.from_ordered([3.5, 4.0])
        assert cfg.angles[0] == pytest.approx(3.5 - math.pi)
        assert cfg.angles[1] == pytest.approx(4.0 - math.pi)

        negative = AngleConfig.from_ordered([-0.5, 0.2])
        assert negative.angles[0] == pytest.approx(math.pi - 0.5)

    def test_relaxed_accepts_coincident_points(self):
        """Test that relaxed configurations may be degenerate."""
        cfg = AngleConfig.relaxed([0.3, 0.3, 1.0])
        assert not cfg.strict
        assert cfg.min_gap() == pytest.approx(0.0, abs=1e-12)

    def test_relaxed_sorts_mod_pi(self):
        """Test that relaxed reduces mod pi and sorts."""
        cfg = AngleConfig.relaxed([2.0 + math.pi, 0.5])
        np.testing.assert_allclose(cfg.angles, [0.5, 2.0])
        assert cfg.strict

    def test_equally_spaced_gaps(self):
        """Test that the symmetric configuration has equal gaps pi/n."""
        for n in (2, 3, 5):
            cfg = AngleConfig.equally_spaced(n)
            np.testing.assert_allclose(cfg.gaps, math.pi / n)
            assert cfg.gaps.sum() == pytest.approx(math.pi)

    def test_rotation_by_pi_is_identity(self):
        """Test that rotating by pi gives back the same configuration."""
        cfg = AngleConfig((0.2, 0.9, 1.7))
        np.testing.assert_allclose(cfg.rotated(math.pi).angles, cfg.angles, atol=1e-12)

    def test_rotation_recanonicalises_mod_pi(self):
        """Test that rotation reduces every angle mod pi and re-sorts."""
        cfg = AngleConfig((0.1, 2.0))
        turned = cfg.rotated(1.5)
        np.testing.assert_allclose(turned.angles, [3.5 - math.pi, 1.6], atol=1e-12)
        assert turned.strict
        np.testing.assert_allclose(turned.angles, AngleConfig.relaxed([1.6, 3.5]).angles, atol=1e-12)
        np.testing.assert_allclose(np.sort(turned.gaps), np.sort(cfg.gaps), atol=1e-12)
        np.testing.assert_allclose(turned.rotated(-1.5).angles, cfg.angles, atol=1e-12)

    def test_points_lie_on_unit_circle(self):
        """Test the point form z = exp(2 i theta)."""
        cfg = AngleConfig.equally_spaced(4)
        z = cfg.points()
        np.testing.assert_allclose(np.abs(z), 1.0)
        np.testing.assert_allclose(z.sum(), 0.0, atol=1e-12)

    def test_str_lists_angles(self):
        """Test the string representation."""
        assert str(AngleConfig((0.0, 1.0))) == "AngleConfig(n=2, [0.0000, 1.0000])"


class TestDegenerateConfigError:
    """Test the collision error type."""

    def test_error_carries_gap_and_operation(self):
        """Test that the error records what failed."""
        error = DegenerateConfigError(1e-15, "psi")
        assert isinstance(error, ValueError)
        assert error.gap == 1e-15
        assert "psi" in str(error)


class TestModelParams:
    """Test derived parameter formulas."""

    def test_rejects_invalid_ranges(self):
        """Test parameter validation."""
        with pytest.raises(ValueError, match="n must be"):
            ModelParams(n=1, alpha=1.0)
        with pytest.raises(ValueError, match="alpha must be"):
            ModelParams(n=2, alpha=0.0)
        with pytest.raises(ValueError, match="kappa must be"):
            ModelParams.from_kappa(2, -1.0)

    def test_bessel_quantities(self):
        """Test b_alpha, beta and the decay rate."""
        params = ModelParams(n=2, alpha=0.5)
        assert params.b_alpha == pytest.approx(0.25)
        assert params.beta == pytest.approx(0.375)
        assert params.decay_rate == pytest.approx(0.75)

    def test_kappa_eight_thirds(self):
        """Test c = 0, b = 5/8 and b_tilde = 5/48 at kappa = 8/3."""
        params = ModelParams.from_kappa(2, 8.0 / 3.0)
        assert params.central_charge == pytest.approx(0.0, abs=1e-12)
        assert params.b == pytest.approx(5.0 / 8.0)
        assert params.b_tilde == pytest.approx(5.0 / 48.0)
        assert params.fractal_dimension == pytest.approx(4.0 / 3.0)

    def test_kappa_two_central_charge(self):
        """Test c = -2 at kappa = 2."""
        assert ModelParams.from_kappa(3, 2.0).central_charge == pytest.approx(-2.0)

    def test_sle_quantities_need_a(self):
        """Test that kappa is unavailable without the SLE parameter."""
        with pytest.raises(ValueError, match="parameter a"):
            _ = ModelParams(n=2, alpha=1.0).kappa

    def test_for_driver_multipliers(self):
        """Test alpha = a for locally independent and alpha = 2a for n-radial drivers."""
        independent = ModelParams.for_driver(3, 4.0, "locally-independent")
        radial = ModelParams.for_driver(3, 4.0, "n-radial")
        assert independent.alpha == pytest.approx(0.5)
        assert radial.alpha == pytest.approx(1.0)
        assert radial.a == pytest.approx(0.5)

    def test_for_driver_rejects_kappa_eight(self):
        """Test that kappa >= 8 is refused with a message naming the bound."""
        with pytest.raises(ValueError, match="κ < 8"):
            ModelParams.for_driver(2, 8.0)
        with pytest.raises(ValueError, match="law must be"):
            ModelParams.for_driver(2, 4.0, "chordal")

    def test_beta_hat_requires_alpha_equal_a(self):
        """Test that beta_hat is only defined for locally independent parameters."""
        params = ModelParams.from_kappa(3, 4.0, multiplier=1.0)
        assert params.beta_hat == pytest.approx(params.beta - params.b_tilde * 2)
        with pytest.raises(ValueError, match="alpha = a"):
            _ = ModelParams.from_kappa(3, 4.0, multiplier=2.0).beta_hat

    def test_beta_hat_closed_form(self):
        """Test the closed form at kappa = 2, where the (kappa - 2) term vanishes."""
        params = ModelParams.from_kappa(2, 2.0)
        assert params.beta_hat_closed_form == pytest.approx(12.0 / 16.0)

"""
Unit tests for reference constants and residual certification.
"""

import math

import numpy as np
import pytest

from src.models.domain import AxisymmetricDomain
from src.tools.grid_tools import build_grid
from src.tools.oracle_tools import (
    bubble,
    bubble_normalization,
    certify_bubble,
    certify_radial_extremal,
    hardy_sobolev_extremal,
    hardy_sobolev_normalization,
    oracle_constants,
    residual_oracle,
    sobolev_constant,
    sobolev_constant_closed_form,
    sobolev_rayleigh_quotient,
    sobolev_threshold,
)
from src.utils.errors import ParameterError


class TestSobolevConstant:
    """Test S_N by three independent routes."""

    def test_closed_form_n3(self):
        assert sobolev_constant_closed_form(3) == pytest.approx(3.0 * (math.pi / 2.0) ** (4.0 / 3.0), rel=1e-12)
        assert sobolev_constant_closed_form(3) == pytest.approx(5.4779, abs=1e-4)

    def test_closed_form_n4(self):
        assert sobolev_constant_closed_form(4) == pytest.approx(8.0 * math.pi / math.sqrt(6.0), rel=1e-12)

    @pytest.mark.parametrize("N", [3, 4, 5])
    def test_graded_quotient_matches_closed_form(self, N):
        assert sobolev_constant(N) == pytest.approx(sobolev_constant_closed_form(N), rel=1e-4)

    @pytest.mark.parametrize("N", [3, 4])
    def test_rayleigh_quotient_matches_closed_form(self, N):
        assert sobolev_rayleigh_quotient(N, mu=3.0) == pytest.approx(sobolev_constant_closed_form(N), rel=1e-5)

    def test_threshold(self):
        assert sobolev_threshold(4) == pytest.approx(sobolev_constant(4) ** 2 / 4.0)

    def test_low_dimension_rejected(self):
        with pytest.raises(ParameterError):
            sobolev_constant(2)


class TestNormalizations:
    """Test constants recovered from the radial ODE."""

    def test_hardy_sobolev_n3_s1(self):
        assert hardy_sobolev_normalization(3, 1.0) == pytest.approx(math.sqrt(2.0))

    def test_bubble_n3(self):
        assert bubble_normalization(3) == pytest.approx(3.0**0.25)

    def test_s_two_rejected(self):
        with pytest.raises(ParameterError, match="0 <= s < 2"):
            hardy_sobolev_normalization(3, 2.0)


class TestReferenceFields:
    """Test sampled bubbles and their certification."""

    def test_bubble_peak(self):
        grid = build_grid(AxisymmetricDomain.half_ball_flat(3, 2.0), 16, 8, 1.5)
        w = bubble(3, 1.0, 0.0, grid)
        assert w.sup_norm() == pytest.approx(bubble_normalization(3))
        assert w.values[0, 0] == pytest.approx(bubble_normalization(3))

    def test_bubble_scale_validation(self):
        grid = build_grid(AxisymmetricDomain.half_ball_flat(3, 2.0), 16, 8, 1.5)
        with pytest.raises(ParameterError, match="positive"):
            bubble(3, 0.0, 0.0, grid)

    def test_bubble_certifies(self):
        cert = certify_bubble(3)
        assert cert.order >= 1.5
        assert cert.certified
        assert cert.residuals[1] < cert.residuals[0]

    def test_extremal_profile(self, half_ball_grid):
        w = hardy_sobolev_extremal(3, 1.0, half_ball_grid, certify=False)
        c = hardy_sobolev_normalization(3, 1.0)
        assert w.values[0, 0] == pytest.approx(c)
        # (1 + r)^{-1} for N=3, s=1
        np.testing.assert_allclose(w.values, c / (1.0 + half_ball_grid.radius), rtol=1e-12)

    @pytest.mark.parametrize("s", [0.0, 0.5, 1.0])
    def test_radial_extremal_certifies(self, s):
        assert certify_radial_extremal(3, s).certified

    def test_residual_oracle_needs_two_fields(self, two_pole_half_ball, half_ball_grid):
        with pytest.raises(ParameterError, match="two resolutions"):
            residual_oracle([bubble(3, 1.0, 0.0, half_ball_grid)], two_pole_half_ball)


class TestOracleConstants:
    """Test the collected constants record."""

    def test_n3_record(self):
        record = oracle_constants(3, s_values=(1.0,))
        assert record.N == 3
        assert record.threshold == pytest.approx(record.S_N**1.5 / 3.0)
        assert record.C_N == pytest.approx(3.0**0.25)
        assert set(record.hardy_sobolev_norm) == {"1"}
        assert set(record.certification_orders) == {"bubble", "hardy_sobolev_s=1"}

"""
Unit tests for the Kelvin transform and the moving-sphere weights.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from pydantic import ValidationError

from src.models.domain import AxisymmetricDomain
from src.models.exponents import MovingSphereProbe
from src.tools.grid_tools import GridFunction, build_grid
from src.tools.transform_tools import (
    kelvin_transform,
    moving_sphere_weight,
    moving_sphere_weight_derivative,
    sphere_weight_comparison,
)
from src.utils.errors import OutOfRangeError, ParameterError, SingularPointError


def _sphere(R=1.0, sphere_radius=2.0, angle=0.6, N=3):
    theta = [0.0] * N
    theta[0] = math.sin(angle)
    theta[-1] = math.cos(angle)
    return MovingSphereProbe(R=R, sphere_radius=sphere_radius, theta=tuple(theta))


class TestMovingSphereProbe:
    """Test moving-sphere validation and the derived range."""

    def test_mu1(self):
        sphere = _sphere(R=1.0, angle=math.pi / 3)
        assert sphere.mu1 == pytest.approx(2.0)
        assert sphere.mu_max == pytest.approx(4.0)
        assert sphere.dimension == 3

    def test_sphere_must_exceed_reflection_distance(self):
        with pytest.raises(ValidationError, match="sphere_radius"):
            _sphere(R=2.0, sphere_radius=1.0)

    def test_direction_must_be_unit(self):
        with pytest.raises(ValidationError, match="unit vector"):
            MovingSphereProbe(R=1.0, sphere_radius=2.0, theta=(0.0, 0.0, 2.0))

    def test_direction_must_point_up(self):
        with pytest.raises(ValidationError, match="upper half-space"):
            MovingSphereProbe(R=1.0, sphere_radius=2.0, theta=(1.0, 0.0, 0.0))


class TestMovingSphereWeight:
    """Test eta(mu) = mu^2 / |x_R + mu theta|^2."""

    def test_out_of_range(self):
        sphere = _sphere()
        with pytest.raises(OutOfRangeError):
            moving_sphere_weight(sphere, sphere.mu1)

    @settings(max_examples=100, deadline=None)
    @given(
        angle=st.floats(min_value=0.0, max_value=1.4),
        fraction=st.floats(min_value=0.01, max_value=0.99),
    )
    def test_decreasing_past_mu1(self, angle, fraction):
        """eta' < 0 on (mu1, mu_max)."""
        sphere = _sphere(R=1.0, sphere_radius=6.0, angle=angle)
        mu = sphere.mu1 + fraction * (sphere.mu_max - sphere.mu1)
        assert moving_sphere_weight_derivative(sphere, mu) < 0.0

    def test_derivative_matches_central_difference(self):
        sphere = _sphere()
        mu = np.linspace(sphere.mu1 + 0.1, sphere.mu_max, 7)
        h = 1e-6
        fd = (moving_sphere_weight(sphere, mu + h) - moving_sphere_weight(sphere, mu - h)) / (2.0 * h)
        np.testing.assert_allclose(moving_sphere_weight_derivative(sphere, mu), fd, rtol=1e-6, atol=1e-10)

    def test_reflected_weight_inequality(self):
        """lhs <= rhs inside B_lam(x_R) above the boundary plane."""
        rng = np.random.default_rng(0)
        R, lam, N = 1.0, 2.0, 4
        points = []
        while len(points) < 500:
            y = rng.uniform(-lam, lam, N)
            y[-1] = abs(y[-1])
            x_R = np.zeros(N)
            x_R[-1] = -R
            if np.linalg.norm(y - x_R) < lam and y[-1] > 0.0:
                points.append(y)
        lhs, rhs = sphere_weight_comparison(np.array(points), R, lam, 1.0)
        assert np.all(lhs <= rhs * (1.0 + 1e-12))


class TestKelvinTransform:
    """Test inversion of grid functions."""

    @pytest.fixture
    def grid(self):
        return build_grid(AxisymmetricDomain.truncated_half_space(3, 4.0), 32, 16, 1.0)

    def test_involution_on_annulus(self, grid):
        """Applying the transform twice returns the field on 1/2 <= |y| <= 2."""
        u = GridFunction(grid, grid.z * np.exp(-0.5 * grid.radius**2))
        twice = kelvin_transform(kelvin_transform(u, 0.0, 1.0), 0.0, 1.0)
        annulus = (grid.radius >= 0.5) & (grid.radius <= 2.0)
        error = np.max(np.abs(twice.values[annulus] - u.values[annulus])) / u.sup_norm()
        assert error <= 2e-2

    def test_fixed_sphere(self, grid):
        """Points on the inversion sphere keep their values."""
        u = GridFunction(grid, grid.z * np.exp(-0.5 * grid.radius**2))
        image = kelvin_transform(u, 0.0, 2.0)
        on_sphere = np.isclose(grid.radius, 2.0) & ~grid.dirichlet
        assert on_sphere.any()
        np.testing.assert_allclose(image.values[on_sphere], u.values[on_sphere], atol=1e-8)

    def test_center_on_interior_node(self):
        grid = build_grid(AxisymmetricDomain.half_ball_flat(3, 1.0), 16, 8, 1.0)
        with pytest.raises(SingularPointError):
            kelvin_transform(GridFunction.zeros(grid), 0.5, 0.25)

    def test_radius_must_be_positive(self, grid):
        with pytest.raises(ParameterError, match="positive"):
            kelvin_transform(GridFunction.zeros(grid), 0.0, 0.0)

    def test_center_off_axis(self, grid):
        with pytest.raises(ParameterError, match="symmetry axis"):
            kelvin_transform(GridFunction.zeros(grid), (0.3, 0.5), 1.0)

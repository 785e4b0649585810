"""
Unit tests for meridian grids, quadrature and discrete operators.

Covers:
  1. Grid construction, grading and the Dirichlet node set
  2. GridFunction storage rules
  3. Volume and weighted quadrature against closed forms
  4. The flattening chart and the mean-curvature convention
  5. Strong-form Laplacian on manufactured fields, flat and sheared
"""

import math

import numpy as np
import pytest

from src.models.domain import AxisymmetricDomain, BoundaryGraph
from src.tools.grid_tools import (
    GridFunction,
    boundary_flux,
    build_grid,
    classical_mean_curvature,
    dirichlet_energy,
    discrete_pde_residual,
    evaluate,
    flattening_map,
    laplacian,
    mean_curvature,
    refine,
    residual_norm,
    weighted_integral,
)
from src.utils.errors import ChartError, IntegrabilityError, ParameterError


class TestBuildGrid:
    """Test grid construction."""

    def test_graded_radial_nodes(self, half_ball):
        """r_i = rmax (i / n_r)^gamma with exact end points."""
        grid = build_grid(half_ball, 16, 8, 2.0)
        expected = (np.arange(17) / 16.0) ** 2
        np.testing.assert_allclose(grid.r, expected, rtol=1e-14)
        assert grid.r[0] == 0.0
        assert grid.r[-1] == half_ball.rmax
        assert grid.theta[-1] == pytest.approx(0.5 * math.pi)

    def test_rejects_coarse_grid(self, half_ball):
        """Fewer than 8 intervals per direction is refused."""
        with pytest.raises(ParameterError, match="at least 8"):
            build_grid(half_ball, 4, 8, 1.0)

    def test_rejects_contracting_grading(self, half_ball):
        """Grading below 1 would cluster nodes at the outer arc."""
        with pytest.raises(ParameterError, match="grading"):
            build_grid(half_ball, 16, 8, 0.5)

    def test_rejects_non_domain(self):
        """Only AxisymmetricDomain instances describe a grid."""
        with pytest.raises(ParameterError):
            build_grid("half ball", 16, 8, 1.0)

    def test_dirichlet_nodes(self, half_ball_grid):
        """Origin row, outer arc and boundary column are Dirichlet."""
        mask = half_ball_grid.dirichlet
        assert mask[0].all() and mask[-1].all() and mask[:, -1].all()
        assert not mask[1:-1, :-1].any()
        assert half_ball_grid.free_index.size == (16 - 1) * 8

    def test_refine_doubles_counts(self, half_ball_grid):
        """refine keeps the domain and grading."""
        fine = refine(half_ball_grid)
        assert (fine.n_r, fine.n_theta) == (32, 16)
        assert fine.gamma == half_ball_grid.gamma
        assert fine.domain == half_ball_grid.domain


class TestGridFunction:
    """Test field storage."""

    def test_values_are_read_only(self, half_ball_grid):
        u = GridFunction.zeros(half_ball_grid)
        with pytest.raises(ValueError):
            u.values[1, 1] = 1.0

    def test_rejects_non_finite(self, half_ball_grid):
        values = np.zeros(half_ball_grid.shape)
        values[2, 2] = np.nan
        with pytest.raises(ParameterError, match="finite"):
            GridFunction(half_ball_grid, values)

    def test_rejects_wrong_size(self, half_ball_grid):
        with pytest.raises(ParameterError, match="does not fit"):
            GridFunction(half_ball_grid, np.zeros(5))

    def test_accepts_flat_vector(self, half_ball_grid):
        u = GridFunction(half_ball_grid, np.ones(half_ball_grid.size))
        assert u.values.shape == half_ball_grid.shape

    def test_apply_dirichlet(self, half_ball_grid):
        """Boundary values are carried until apply_dirichlet zeroes them."""
        u = GridFunction(half_ball_grid, np.ones(half_ball_grid.shape))
        assert u.values[-1, 0] == 1.0
        cleared = u.apply_dirichlet()
        assert not cleared.values[half_ball_grid.dirichlet].any()
        assert cleared.values[1, 0] == 1.0

    def test_maximum_location(self, half_ball_grid):
        values = np.zeros(half_ball_grid.shape)
        values[5, 0] = 3.0
        m, (rho, z) = GridFunction(half_ball_grid, values).maximum()
        assert m == 3.0
        assert rho == pytest.approx(0.0, abs=1e-15)
        assert z == pytest.approx(half_ball_grid.r[5])


class TestQuadrature:
    """Test volume and weighted integrals."""

    def test_measure_converges_to_half_ball_volume(self, half_ball):
        """Total cell weight approaches 2 pi / 3 under refinement."""
        exact = half_ball.measure()
        assert exact == pytest.approx(2.0 * math.pi / 3.0)
        coarse = abs(build_grid(half_ball, 16, 8, 1.5).measure() - exact)
        fine = abs(build_grid(half_ball, 32, 16, 1.5).measure() - exact)
        assert coarse < 2e-2 * exact
        assert fine < coarse

    def test_shear_preserves_measure(self, half_ball_grid, curved_graph):
        """The flattening map has unit Jacobian."""
        domain = AxisymmetricDomain.curved_cap(3, curved_graph, 1.0)
        cap = build_grid(domain, 16, 8, 1.5)
        assert cap.measure() == pytest.approx(half_ball_grid.measure(), rel=1e-14)

    def test_constant_weight_matches_measure(self, half_ball_grid):
        one = GridFunction(half_ball_grid, np.ones(half_ball_grid.shape))
        assert weighted_integral(one, 0.0) == pytest.approx(half_ball_grid.measure())

    def test_hardy_weight_integral(self):
        """int over the unit half ball of |x|^-1 equals pi for N=3."""
        grid = build_grid(AxisymmetricDomain.half_ball_flat(3, 1.0), 32, 16, 1.0)
        one = GridFunction(grid, np.ones(grid.shape))
        assert weighted_integral(one, 1.0) == pytest.approx(math.pi, rel=1e-2)

    def test_negative_exponent_rejected(self, half_ball_grid):
        with pytest.raises(ParameterError):
            weighted_integral(GridFunction.zeros(half_ball_grid), -0.5)

    def test_non_integrable_weight(self, half_ball_grid):
        """s >= N is not locally integrable."""
        with pytest.raises(IntegrabilityError):
            weighted_integral(GridFunction.zeros(half_ball_grid), 3.0)

    def test_weight_past_hardy_exponent(self):
        """s in (2, N) is refused as well."""
        grid = build_grid(AxisymmetricDomain.half_ball_flat(4, 1.0), 16, 8, 1.5)
        with pytest.raises(IntegrabilityError, match="Hardy exponent"):
            weighted_integral(GridFunction.zeros(grid), 2.5)

    def test_off_axis_pole(self, half_ball_grid):
        with pytest.raises(ParameterError, match="symmetry axis"):
            weighted_integral(GridFunction.zeros(half_ball_grid), 1.0, pole=(0.1, 0.2))

    def test_constant_has_no_dirichlet_energy(self, half_ball_grid):
        """Stiffness rows sum to zero."""
        one = GridFunction(half_ball_grid, np.ones(half_ball_grid.shape))
        assert dirichlet_energy(one) == pytest.approx(0.0, abs=1e-10)

    def test_stiffness_symmetric(self, cap_grid):
        K = cap_grid.stiffness
        assert abs(K - K.T).max() < 1e-10

    def test_linear_field_energy(self, half_ball):
        """|grad z|^2 = 1, so A -> volume."""
        grid = build_grid(half_ball, 32, 16, 1.0)
        z = GridFunction(grid, grid.z)
        assert dirichlet_energy(z) == pytest.approx(half_ball.measure(), rel=2e-2)

    def test_residual_norm_exclusion(self, half_ball_grid):
        one = GridFunction(half_ball_grid, np.ones(half_ball_grid.shape))
        assert residual_norm(one) > 0.0
        assert residual_norm(one, exclusion_radius=2.0) == 0.0


class TestChart:
    """Test the flattening chart and curvature convention."""

    def test_round_trip(self, curved_graph):
        x = np.array([[0.3, 0.1, 0.2], [-0.2, 0.4, 0.05]])
        back = flattening_map(flattening_map(x, curved_graph), curved_graph, inverse=True)
        np.testing.assert_allclose(back, x, rtol=0, atol=1e-15)

    def test_flattens_the_boundary(self, curved_graph):
        """Boundary points map to y_N = 0."""
        rho = 0.4
        y = flattening_map([rho, 0.0, curved_graph.height(rho)], curved_graph)
        assert y[-1] == pytest.approx(0.0, abs=1e-15)

    def test_outside_chart(self, curved_graph):
        with pytest.raises(ChartError):
            flattening_map([1.0, 0.0, 0.0], curved_graph)

    def test_chart_must_be_diffeomorphic(self):
        """|alpha| r0 >= 1/2 is rejected by the graph model."""
        with pytest.raises(ValueError, match="diffeomorphism"):
            BoundaryGraph(alpha=1.0, cutoff_radius=0.6)

    def test_mean_curvature_convention(self, curved_graph):
        """H(0) = alpha, half the classical mean curvature."""
        assert mean_curvature(curved_graph, 3) == pytest.approx(-0.5)
        assert classical_mean_curvature(curved_graph, 5) == pytest.approx(-1.0)


class TestOperators:
    """Test interpolation and strong-form operators."""

    def test_evaluate_smooth_field(self, half_ball):
        grid = build_grid(half_ball, 32, 16, 1.0)
        u = GridFunction(grid, grid.rho**2 + grid.z**2)
        rho = np.array([0.1, 0.3, 0.5])
        z = np.array([0.2, 0.4, 0.1])
        np.testing.assert_allclose(evaluate(u, rho, z), rho**2 + z**2, atol=1e-6)

    def test_evaluate_fill_outside(self, half_ball_grid):
        u = GridFunction(half_ball_grid, np.ones(half_ball_grid.shape))
        values = evaluate(u, [0.1, 2.0], [-0.1, 0.0], fill=-7.0)
        np.testing.assert_array_equal(values, [-7.0, -7.0])

    def test_flat_laplacian_of_square_radius(self, half_ball_grid):
        """Delta |x|^2 = 2N, reproduced exactly by the stencils."""
        u = GridFunction(half_ball_grid, half_ball_grid.radius**2)
        lap = laplacian(u)
        interior = ~half_ball_grid.dirichlet
        np.testing.assert_allclose(lap[interior], 6.0, rtol=1e-8)
        assert not lap[half_ball_grid.dirichlet].any()

    def test_sheared_laplacian(self, curved_graph):
        """u = x_N - alpha |x'|^2 has Delta u = -2 alpha (N - 1)."""
        domain = AxisymmetricDomain.curved_cap(3, curved_graph, 0.9)
        grid = build_grid(domain, 32, 16, 1.0)
        u = GridFunction(grid, grid.zeta)
        lap = laplacian(u)
        inside = ~grid.dirichlet & (grid.r[:, None] >= 0.2)
        np.testing.assert_allclose(lap[inside], 2.0, atol=5e-2)

    def test_star_shaped_flag(self, half_ball_grid, cap_grid):
        """x . nu >= 0 holds on the flat half ball but not on a concave cap."""
        flat = GridFunction(half_ball_grid, half_ball_grid.radius * (1.0 - half_ball_grid.radius))
        curved = GridFunction(cap_grid, cap_grid.radius * (0.9 - cap_grid.radius))
        assert boundary_flux(flat)[1] is True
        assert boundary_flux(curved)[1] is False

    def test_residual_of_zero_field(self, two_pole_half_ball, half_ball_grid):
        residual = discrete_pde_residual(GridFunction.zeros(half_ball_grid), two_pole_half_ball)
        assert not residual.values.any()

    def test_residual_vanishes_on_dirichlet_nodes(self, two_pole_half_ball, half_ball_grid):
        u = GridFunction(half_ball_grid, np.exp(-half_ball_grid.radius**2))
        residual = discrete_pde_residual(u, two_pole_half_ball)
        assert not residual.values[half_ball_grid.dirichlet].any()
        assert np.abs(residual.values[~half_ball_grid.dirichlet]).max() > 0.0

    def test_boundary_flux_manufactured_field(self, half_ball):
        """u = z (1 - |x|^2) on the N=3 half ball has flux (1/2) int 4 cos^2 = 4 pi / 3."""
        exact = 4.0 * math.pi / 3.0
        errors = []
        for n in (16, 32, 64):
            grid = build_grid(half_ball, n, n // 2, 1.0)
            u = GridFunction(grid, grid.z * (1.0 - grid.radius**2))
            flux, star_shaped = boundary_flux(u)
            assert star_shaped
            errors.append(abs(flux - exact))
        assert errors[0] > errors[1] > errors[2]
        assert errors[2] <= 1e-2 * exact

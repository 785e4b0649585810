"""
Unit tests for the least-energy solver, continuation and rescaling.

Covers:
  1. Initial guesses (reproducible, zero on Dirichlet nodes)
  2. Descent preconditions and postconditions
  3. Schedule validation and the continuation trace
  4. Blow-up rescaling and the Cauchy diagnostic
"""

import numpy as np
import pytest

from src.models.reports import ContinuationStep
from src.tools.functional_tools import DiscreteFunctional, energy
from src.tools.grid_tools import GridFunction, evaluate
from src.tools.oracle_tools import bubble
from src.tools.solver_tools import (
    SolverOptions,
    _classify,
    blowup_rescale,
    continuation,
    initial_guess,
    minimize,
    rescaled_cauchy,
    warm_start_check,
)
from src.utils.errors import ParameterError, ScaleError


class TestInitialGuess:
    """Test the truncated-bubble starting fields."""

    def test_zero_on_dirichlet_nodes(self, half_ball_grid):
        u = initial_guess(half_ball_grid)
        assert not u.values[half_ball_grid.dirichlet].any()
        assert (u.values >= 0.0).all()
        assert u.sup_norm() > 0.0

    def test_seeded_guess_is_reproducible(self, half_ball_grid):
        first = initial_guess(half_ball_grid, seed=7)
        second = initial_guess(half_ball_grid, seed=7)
        np.testing.assert_array_equal(first.values, second.values)

    def test_seeds_differ(self, half_ball_grid):
        first = initial_guess(half_ball_grid, seed=1)
        second = initial_guess(half_ball_grid, seed=2)
        assert not np.array_equal(first.values, second.values)


class TestMinimize:
    """Test the Nehari-normalized descent."""

    def test_requires_subcritical_offset(self, two_pole_half_ball, half_ball_grid, small_opts):
        spec = two_pole_half_ball.with_epsilon(0.0)
        with pytest.raises(ParameterError, match="allow_critical"):
            minimize(spec, initial_guess(half_ball_grid), small_opts)

    def test_rejects_zero_start(self, two_pole_half_ball, half_ball_grid, small_opts):
        with pytest.raises(ParameterError, match="identically zero"):
            minimize(two_pole_half_ball, GridFunction.zeros(half_ball_grid), small_opts)

    def test_descends_from_start(self, two_pole_half_ball, half_ball_grid, small_opts):
        """The final level does not exceed the Nehari-scaled starting level."""
        init = initial_guess(half_ball_grid)
        functional = DiscreteFunctional.from_spec(two_pole_half_ball, half_ball_grid)
        start = functional.phi(functional.ray_scale(init.flat) * init.flat)
        u, report = minimize(two_pole_half_ball, init, small_opts)
        assert 0.0 < report.c_level <= start
        assert (u.values >= 0.0).all()
        assert not u.values[half_ball_grid.dirichlet].any()

    def test_output_on_nehari_manifold(self, two_pole_half_ball, half_ball_grid, small_opts):
        u, report = minimize(two_pole_half_ball, initial_guess(half_ball_grid), small_opts)
        breakdown = energy(u, two_pole_half_ball)
        assert abs(breakdown.nehari) <= 1e-8 * breakdown.A
        assert report.c_level == pytest.approx(breakdown.phi, rel=1e-12)
        assert report.m == pytest.approx(u.sup_norm())

    def test_converges_on_coarse_grid(self, two_pole_half_ball, half_ball_grid):
        opts = SolverOptions(tol=1e-4, max_iter=2000)
        _, report = minimize(two_pole_half_ball, initial_guess(half_ball_grid), opts)
        assert report.converged
        assert report.grad_norm <= 1e-4


class TestContinuation:
    """Test schedule handling and verdicts."""

    @pytest.mark.parametrize("schedule", [[0.1, 0.2], [0.1, 0.1], [0.1, 0.0], []])
    def test_rejects_bad_schedule(self, two_pole_half_ball, small_opts, schedule):
        with pytest.raises(ParameterError):
            continuation(two_pole_half_ball, schedule, small_opts)

    def test_trace_rows(self, two_pole_half_ball, small_opts):
        trace = continuation(two_pole_half_ball, [0.2, 0.1], small_opts)
        assert len(trace.steps) == len(trace.fields) == 2
        assert trace.schedule == (0.2, 0.1)
        assert trace.verdict in ("Compact", "BlowUp", "Inconclusive")
        rows = trace.rows()
        assert rows[0]["epsilon"] == 0.2
        assert set(rows[0]) >= {"c_level", "m", "abs_x", "k", "abs_x_over_k", "r_eps", "verdict"}
        assert all(row["verdict"] == trace.verdict for row in rows)

    def test_warm_start_difference(self, two_pole_half_ball, small_opts):
        trace = continuation(two_pole_half_ball, [0.2, 0.1], small_opts)
        assert warm_start_check(two_pole_half_ball, trace, 1, small_opts) >= 0.0

    def _step(self, report, m, level, abs_x=0.1):
        updated = report.model_copy(update={"m": m, "c_level": level, "converged": True})
        return ContinuationStep(epsilon=0.1, report=updated, abs_x=abs_x, ratio=1.0, r_scale=0.1)

    def test_blowup_verdict(self, two_pole_half_ball, half_ball_grid, small_opts):
        """Strictly growing maxima past the factor, concentrating at the origin, give BlowUp."""
        _, report = minimize(two_pole_half_ball, initial_guess(half_ball_grid), small_opts)
        growth = ((1.0, 0.4), (5.0, 0.2), (60.0, 0.1), (400.0, 0.05))
        steps = [self._step(report, m, 1.0, abs_x) for m, abs_x in growth]
        assert _classify(steps, SolverOptions()) == "BlowUp"

    def test_growth_away_from_origin_is_inconclusive(self, two_pole_half_ball, half_ball_grid, small_opts):
        """The same growth with a maximizer that stays put is not a blow-up."""
        _, report = minimize(two_pole_half_ball, initial_guess(half_ball_grid), small_opts)
        steps = [self._step(report, m, 1.0, 0.3) for m in (1.0, 5.0, 60.0, 400.0)]
        assert _classify(steps, SolverOptions()) == "Inconclusive"

        drifting = [self._step(report, m, 1.0, x) for m, x in ((1.0, 0.1), (5.0, 0.2), (60.0, 0.3), (400.0, 0.4))]
        assert _classify(drifting, SolverOptions()) == "Inconclusive"

    def test_compact_verdict(self, two_pole_half_ball, half_ball_grid, small_opts):
        """Bounded maxima and a settled level give Compact."""
        _, report = minimize(two_pole_half_ball, initial_guess(half_ball_grid), small_opts)
        steps = [self._step(report, m, c) for m, c in ((1.0, 1.1), (1.2, 1.05), (1.3, 1.04))]
        assert _classify(steps, SolverOptions()) == "Compact"


class TestRescaling:
    """Test the blow-up profile."""

    def test_unit_peak(self, two_pole_half_ball, half_ball_grid, small_opts):
        u, report = minimize(two_pole_half_ball, initial_guess(half_ball_grid), small_opts)
        profile = blowup_rescale(u, report, two_pole_half_ball)
        height = report.argmax[1]
        assert profile.sup_norm() <= 1.0 + 1e-2
        assert profile.grid.rmax == pytest.approx((half_ball_grid.rmax - height) / report.k)

    def test_centered_on_maximizer(self, two_pole_half_ball, half_ball_grid, small_opts):
        """v(0) = 1 when x_eps sits away from the boundary origin."""
        _, report = minimize(two_pole_half_ball, initial_guess(half_ball_grid), small_opts)
        height = float(half_ball_grid.r[5])
        u = bubble(3, 8.0, height, half_ball_grid).apply_dirichlet()
        m, argmax = u.maximum()
        assert argmax == (0.0, pytest.approx(height))
        report = report.model_copy(update={"m": m, "argmax": argmax, "k": 0.05})
        profile = blowup_rescale(u, report, two_pole_half_ball)
        assert profile.values[0, 0] == pytest.approx(1.0, abs=1e-3)
        assert evaluate(profile, 0.0, 0.0)[()] == pytest.approx(1.0, abs=1e-3)
        # nodes on the y axis sit k |y| above x_eps
        y = float(profile.grid.r[3])
        expected = evaluate(u, 0.0, height + 0.05 * y)[()] / m
        assert profile.values[3, 0] == pytest.approx(expected, rel=1e-12)

    def test_underflowing_scale(self, two_pole_half_ball, half_ball_grid, small_opts):
        u, report = minimize(two_pole_half_ball, initial_guess(half_ball_grid), small_opts)
        with pytest.raises(ScaleError):
            blowup_rescale(u, report.model_copy(update={"k": 1e-15}), two_pole_half_ball)

    def test_identical_profiles_have_zero_gap(self, half_ball_grid):
        u = initial_guess(half_ball_grid)
        assert rescaled_cauchy([u, u], 0.5) == [pytest.approx(0.0, abs=1e-12)]

"""
Unit tests for test functions, ray sweeps and the bubble threshold.

Covers:
  1. Cutoffs and the scale ladder
  2. Curved-cap test functions, which on a flat boundary reproduce the
     entire profile exactly (zero gap, zero expansion shifts)
  3. The H(0) factor pinned by measured shifts, and the slope check
  4. Ray sweeps and their edge errors
  5. Bubble rays for the perturbed problem and the uncut calibration
"""

import math

import numpy as np
import pytest

from src.graphs.curved_existence import SHIFT_RTOL, shift_matches, slope_matches
from src.models.domain import AxisymmetricDomain, BoundaryGraph
from src.models.problem import ProblemSpec
from src.models.reports import BubbleRecord, ExpansionShift, GapFit
from src.tools.oracle_tools import sobolev_threshold
from src.tools.testfn_tools import (
    BubbleSpec,
    TestFunctionSpec,
    bubble_calibration,
    bubble_threshold_check,
    build_test_function,
    check_perturbed_regime,
    curvature_convention,
    cutoff,
    default_ladder,
    expansion_shifts,
    gap_record,
    gap_ladder,
    margin_increasing,
    quintic_ramp,
    ray_sweep,
)
from src.utils.errors import ParameterError, SweepRangeError


@pytest.fixture
def flat_graph():
    return BoundaryGraph(alpha=0.0, cutoff_radius=0.9)


class TestCutoff:
    """Test the C^2 cutoff."""

    def test_ramp_values(self):
        np.testing.assert_allclose(quintic_ramp([-1.0, 0.0, 0.5, 1.0, 2.0]), [1.0, 1.0, 0.5, 0.0, 0.0])

    def test_plateau_and_support(self):
        values = cutoff([0.1, 0.45, 0.9, 1.2], 0.9)
        assert values[0] == 1.0 and values[1] == 1.0
        assert values[2] == 0.0 and values[3] == 0.0


class TestCurvedTestFunction:
    """Test u_eps on caps."""

    def test_scale_limit(self, entire_solution, flat_graph):
        too_large = 2.0 * flat_graph.cutoff_radius / (10.0 * entire_solution.rmax)
        with pytest.raises(ParameterError, match="cutoff plateau"):
            TestFunctionSpec(entire=entire_solution, graph=flat_graph, epsilon=too_large)

    def test_scale_positive(self, entire_solution, flat_graph):
        with pytest.raises(ParameterError, match="positive"):
            TestFunctionSpec(entire=entire_solution, graph=flat_graph, epsilon=0.0)

    def test_default_ladder_is_dyadic(self, entire_solution, flat_graph):
        ladder = default_ladder(entire_solution, flat_graph, 5)
        assert ladder[0] == pytest.approx(0.9 / (10.0 * entire_solution.rmax))
        np.testing.assert_allclose(np.array(ladder[:-1]) / np.array(ladder[1:]), 2.0)

    def test_flat_boundary_reproduces_profile(self, entire_solution, flat_graph):
        """On a flat boundary the core nodes carry eps^{-(N-2)/2} v exactly."""
        eps = default_ladder(entire_solution, flat_graph)[1]
        u = build_test_function(TestFunctionSpec(entire=entire_solution, graph=flat_graph, epsilon=eps))
        v = entire_solution.profile
        n_core = v.grid.n_r + 1
        np.testing.assert_allclose(u.values[:n_core], eps ** -0.5 * v.values, rtol=1e-13, atol=0.0)
        assert not u.values[n_core:].any()

    def test_flat_gap_vanishes(self, entire_solution, flat_graph):
        """Dilation invariance: Phi(u_eps) = c1 when H(0) = 0."""
        eps = default_ladder(entire_solution, flat_graph)[0]
        record = gap_record(entire_solution, flat_graph, eps)
        assert abs(record.gap_at_unit_t) <= 1e-9 * entire_solution.c1
        assert record.t_at_max == pytest.approx(1.0, rel=1e-4)

    def test_flat_slope_and_shifts(self, entire_solution, flat_graph):
        fit = gap_ladder(entire_solution, flat_graph)
        assert fit.mean_curvature == 0.0
        assert fit.predicted_slope == 0.0
        assert not fit.counterexamples
        assert slope_matches(fit)
        for shift in expansion_shifts(entire_solution, flat_graph, fit.records[-1].epsilon):
            assert shift.predicted == 0.0
            assert abs(shift.measured) <= 1e-6 * entire_solution.c1

    def test_curved_predictions(self, entire_solution, curved_graph):
        """alpha = -1/2 gives H(0) = -1/2 and a positive predicted slope."""
        fit = gap_ladder(entire_solution, curved_graph)
        assert len(fit.records) == 4
        assert fit.mean_curvature == pytest.approx(-0.5)
        assert fit.convention_factor == 1.0
        assert fit.predicted_slope == pytest.approx(0.5 * entire_solution.K1)
        assert all(math.isfinite(r.gap) for r in fit.records)

        doubled = gap_ladder(entire_solution, curved_graph, convention_factor=2.0)
        assert doubled.predicted_slope == pytest.approx(entire_solution.K1)
        assert doubled.slope == pytest.approx(fit.slope)

    def test_curved_shifts_and_slope(self, entire_solution, curved_graph):
        """On a concave cap the shifts pin one H(0) factor and the slope matches it."""
        epsilon = default_ladder(entire_solution, curved_graph)[-1]
        shifts = expansion_shifts(entire_solution, curved_graph, epsilon)
        convention = curvature_convention(shifts)
        assert convention.factor in (1.0, 2.0)
        assert convention.consistent(SHIFT_RTOL)

        pinned = [shift.scaled(convention.factor) for shift in shifts]
        scale = max(abs(shift.predicted) for shift in pinned)
        for shift in pinned:
            assert shift_matches(shift, scale), shift

        fit = gap_ladder(entire_solution, curved_graph, convention_factor=convention.factor)
        assert not fit.counterexamples
        assert slope_matches(fit)

    def test_ladder_validation(self, entire_solution, flat_graph):
        with pytest.raises(ParameterError, match="at least"):
            gap_ladder(entire_solution, flat_graph, [0.004, 0.002])
        with pytest.raises(ParameterError, match="dyadic"):
            gap_ladder(entire_solution, flat_graph, [0.004, 0.003, 0.002, 0.001])


class TestCurvatureConvention:
    """Test pinning the H(0) factor and the single-prediction checks."""

    @staticmethod
    def _shifts(multiplier, predicted=(1.0, -2.0, 0.5)):
        return [
            ExpansionShift(term=term, epsilon=1e-3, measured=multiplier * p, predicted=p)
            for term, p in zip(("dirichlet", "s1", "s2"), predicted)
        ]

    @staticmethod
    def _fit(slope, predicted_slope=1.0):
        return GapFit(
            records=(),
            c1=1.0,
            mean_curvature=-0.5,
            K1=2.0,
            slope=slope,
            slope_at_unit_t=slope,
            predicted_slope=predicted_slope,
        )

    def test_ratio_pins_nearest_factor(self):
        convention = curvature_convention(self._shifts(1.9))
        assert convention.ratio == pytest.approx(1.9)
        assert convention.factor == 2.0
        assert convention.consistent(SHIFT_RTOL)

    def test_ratio_between_factors_is_inconsistent(self):
        convention = curvature_convention(self._shifts(1.45))
        assert convention.factor == 1.0
        assert not convention.consistent(SHIFT_RTOL)

    def test_flat_shifts_rejected(self):
        with pytest.raises(ParameterError, match="no curvature signal"):
            curvature_convention(self._shifts(1.0, predicted=(0.0, 0.0, 0.0)))

    def test_scaled_shift(self):
        shift = self._shifts(2.0)[1].scaled(2.0)
        assert shift.predicted == -4.0
        assert shift.relative_error == pytest.approx(0.0)

    def test_slope_checked_against_one_prediction(self):
        """Half the prediction no longer passes."""
        assert slope_matches(self._fit(1.1))
        assert not slope_matches(self._fit(0.5))

    def test_zero_prediction_uses_absolute_scale(self):
        quiet = ExpansionShift(term="s2", epsilon=1e-3, measured=0.1, predicted=0.0)
        loud = ExpansionShift(term="s2", epsilon=1e-3, measured=0.3, predicted=0.0)
        assert shift_matches(quiet, 1.0)
        assert not shift_matches(loud, 1.0)


class TestRaySweep:
    """Test t -> Phi(t u) sweeps."""

    def test_closed_form_maximum(self):
        """t^2 - t^4/4 peaks at sqrt(2) with value 1."""
        result = ray_sweep(2.0, [(1.0, 1.0, 3.0)])
        assert result.max_phi == pytest.approx(1.0, rel=1e-10)
        assert result.t_at_max == pytest.approx(math.sqrt(2.0), rel=1e-5)

    def test_maximum_at_edge(self):
        with pytest.raises(SweepRangeError):
            ray_sweep(2.0, [(1.0, 1e-6, 3.0)])

    def test_t_grid_validation(self):
        with pytest.raises(ParameterError):
            ray_sweep(2.0, [(1.0, 1.0, 3.0)], t_grid=[1.0, 0.5, 2.0])


class TestBubbleThreshold:
    """Test the perturbed-problem bubble rays."""

    @pytest.fixture
    def perturbed_spec(self):
        return ProblemSpec.perturbed(4, 1.0, 2.5, AxisymmetricDomain.half_ball_flat(4, 1.0))

    def test_regime(self):
        check_perturbed_regime(4, 1.0, 2.5)
        with pytest.raises(ParameterError, match="N >= 4"):
            check_perturbed_regime(3, 1.0, 4.5)
        with pytest.raises(ParameterError, match="outside"):
            check_perturbed_regime(4, 1.0, 3.0)

    def test_bubble_spec_validation(self):
        with pytest.raises(ParameterError, match="avoid the origin"):
            BubbleSpec(center=0.5, mu=4.0, cutoff_radius=0.6)
        with pytest.raises(ParameterError, match="positive"):
            BubbleSpec(center=0.5, mu=0.0, cutoff_radius=0.4)

    def test_support_must_fit(self, perturbed_spec):
        with pytest.raises(ParameterError, match="leaves the domain"):
            bubble_threshold_check(BubbleSpec(0.8, 4.0, 0.3), perturbed_spec, [4.0])

    def test_records(self, perturbed_spec):
        records = bubble_threshold_check(BubbleSpec(0.5, 4.0, 0.45), perturbed_spec, [0.5, 8.0])
        threshold = sobolev_threshold(4)
        assert [r.mu for r in records] == [0.5, 8.0]
        assert all(r.threshold == threshold for r in records)
        assert records[0].inconclusive and not records[1].inconclusive
        assert records[1].margin == pytest.approx(threshold - records[1].sup_phi)

    @pytest.mark.parametrize("N", [3, 4, 5])
    def test_uncut_bubble_calibration(self, N):
        """The uncut bubble ray peaks at S_N^{N/2} / N."""
        assert bubble_calibration(N) == pytest.approx(sobolev_threshold(N), rel=1e-3)

    def test_margin_increasing(self):
        def record(mu, margin, inconclusive=False):
            return BubbleRecord(
                mu=mu,
                sup_phi=1.0 - margin,
                t_at_max=1.0,
                threshold=1.0,
                margin=margin,
                below_threshold=margin > 0.0,
                inconclusive=inconclusive,
            )

        assert margin_increasing([record(0.5, 0.9, True), record(2.0, 0.01), record(4.0, 0.02)])
        assert not margin_increasing([record(2.0, 0.02), record(4.0, 0.01)])
        assert not margin_increasing([record(2.0, 0.02)])

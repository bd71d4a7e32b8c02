"""Tests for equilibria, limit classification and monotonicity."""

import math

import numpy as np
import pytest

import timescale_sir as ts
from timescale_sir.errors import NonRegressiveError
from timescale_sir.sir.model import SirState

from .conftest import TestConstants, TestScenarioFactory, assert_states_close

MONOTONICITY_STEP = 0.1


class TestEquilibria:
    """Test the equilibrium plane."""

    @pytest.mark.unit
    def test_membership(self):
        plane = ts.equilibria(1.0)

        assert plane.contains(SirState(0.3, 0.0, 0.7))
        assert not plane.contains(SirState(0.3, 0.01, 0.69))

    @pytest.mark.unit
    def test_points_and_distance(self):
        plane = ts.equilibria(2.0)

        assert plane.point(0.5) == SirState(0.5, 0.0, 1.5)
        assert plane.distance(SirState(0.5, 0.0, 1.5)) == 0.0
        assert_states_close(plane.nearest(SirState(1.0, 0.2, 0.8)), SirState(1.1, 0.0, 0.9))
        assert plane.distance(SirState(1.0, 0.2, 0.8)) == pytest.approx(0.2 * math.sqrt(1.5))

    @pytest.mark.unit
    def test_alpha_outside_the_segment(self):
        with pytest.raises(ValueError):
            ts.equilibria(1.0).point(1.5)

    @pytest.mark.unit
    @pytest.mark.parametrize("total", [0.0, -1.0, float("inf")])
    def test_total_must_be_positive(self, total):
        with pytest.raises(ValueError):
            ts.equilibria(total)

    @pytest.mark.unit
    def test_long_run_state_is_an_equilibrium(self):
        series = ts.solve(TestScenarioFactory.ex29(0.1), 500, 1.0, ts.SolutionMethod.CLOSED_FORM)
        assert ts.equilibria(1.0).contains(series.final, tolerance=1e-3)


class TestClassifyConstant:
    """Test limit classification with constant rates."""

    @pytest.mark.unit
    def test_transmission_dominates(self):
        classification = ts.classify_limit(TestScenarioFactory.ex29(0.1), 500, 1.0)

        assert classification.outcome is ts.LimitOutcome.ALL_REMOVED
        assert classification.certificate is ts.Certificate.CONSTANT_COEFFICIENTS
        assert classification.alpha_lower_bound is None
        assert classification.terminal_state.x < 1e-3
        assert classification.terminal_state.y < 1e-3
        assert classification.limit(1.0) == SirState(0.0, 0.0, 1.0)

    @pytest.mark.unit
    def test_removal_dominates(self):
        classification = ts.classify_limit(TestScenarioFactory.ex29(0.3), 500, 1.0)

        assert classification.outcome is ts.LimitOutcome.PARTIAL_SUSCEPTIBLE
        assert classification.certificate is ts.Certificate.CONSTANT_COEFFICIENTS
        assert classification.alpha_lower_bound == pytest.approx(
            TestConstants.EX29_ALPHA_LOWER_BOUND, rel=1e-14
        )
        assert (
            classification.alpha_lower_bound <= classification.alpha_estimate <= 1.0
        )
        assert classification.limit(1.0).y == 0.0

    @pytest.mark.unit
    def test_equal_rates_remove_everyone(self, hybrid_timescale):
        scenario = ts.make_scenario(
            hybrid_timescale, ts.constant(0.3), ts.constant(0.3), 0.6, 0.3, 0.1
        )
        classification = ts.classify_limit(scenario, 24, 0.1)

        assert classification.outcome is ts.LimitOutcome.ALL_REMOVED
        assert classification.certificate is ts.Certificate.CONSTANT_COEFFICIENTS

    @pytest.mark.unit
    def test_no_removal_is_undetermined(self):
        scenario = ts.make_scenario(
            ts.integer_range(0, 50), ts.constant(0.2), ts.constant(0.0), 0.8, 0.2
        )
        classification = ts.classify_limit(scenario, 50, 1.0)

        assert classification.outcome is ts.LimitOutcome.UNDETERMINED
        assert classification.certificate is ts.Certificate.NUMERIC_ONLY
        assert classification.limit(1.0) is None

    @pytest.mark.unit
    def test_needs_positively_regressive_rates(self):
        scenario = ts.make_scenario(
            ts.integer_range(0, 50), ts.constant(1.5), ts.constant(0.0), 0.8, 0.2
        )
        with pytest.raises(NonRegressiveError) as excinfo:
            ts.classify_limit(scenario, 50, 1.0)
        assert excinfo.value.witness_t == 0.0

    @pytest.mark.unit
    def test_horizon_before_t0_is_rejected(self):
        scenario = ts.make_scenario(
            ts.integer_range(0, 50), ts.constant(0.2), ts.constant(0.3), 0.8, 0.2, t0=10
        )
        with pytest.raises(ValueError):
            ts.classify_limit(scenario, 5, 1.0)


class TestClassifyNumeric:
    """Test the numeric hypothesis checks for time-varying rates."""

    @pytest.mark.unit
    def test_divergent_transmission(self):
        rate = ts.sinusoid(0.5, 0.25, 1.0)
        scenario = ts.make_scenario(ts.integer_range(0, 200), rate, rate, 0.8, 0.2)
        classification = ts.classify_limit(scenario, 200, 1.0)

        assert classification.outcome is ts.LimitOutcome.ALL_REMOVED
        assert classification.certificate is ts.Certificate.NUMERIC_ONLY
        assert classification.theorem is ts.Certificate.DIVERGENT_TRANSMISSION

    @pytest.mark.unit
    def test_divergent_removal(self):
        scenario = ts.make_scenario(
            ts.integer_range(0, 200),
            ts.sinusoid(0.2, 0.1, 1.0),
            ts.sinusoid(0.6, 0.1, 1.0),
            0.8,
            0.2,
        )
        classification = ts.classify_limit(scenario, 200, 1.0)

        assert classification.outcome is ts.LimitOutcome.PARTIAL_SUSCEPTIBLE
        assert classification.theorem is ts.Certificate.DIVERGENT_REMOVAL
        assert classification.alpha_lower_bound >= 0.8 * math.exp(-0.25 * 0.75) - 1e-12
        assert classification.alpha_estimate >= classification.alpha_lower_bound

    @pytest.mark.unit
    def test_short_horizon_is_undetermined(self):
        scenario = ts.make_scenario(
            ts.integer_range(0, 20),
            ts.sinusoid(0.2, 0.1, 1.0),
            ts.sinusoid(0.6, 0.1, 1.0),
            0.8,
            0.2,
        )
        classification = ts.classify_limit(scenario, 20, 1.0)

        assert classification.outcome is ts.LimitOutcome.UNDETERMINED
        assert classification.theorem is None

    @pytest.mark.unit
    def test_continuous_divergent_transmission(self):
        scenario = ts.make_scenario(
            ts.real_interval(0, 200), ts.reciprocal(10.0, 1.0), ts.reciprocal(10.0, 1.0), 0.4, 1.2
        )
        classification = ts.classify_limit(scenario, 200, 0.5)

        assert classification.outcome is ts.LimitOutcome.ALL_REMOVED
        assert classification.theorem is ts.Certificate.DIVERGENT_TRANSMISSION


def _random_regime_scenario(rng: np.random.Generator, bracketed: bool):
    """Random scenario whose rates satisfy one of the decrease hypotheses."""
    scale = TestScenarioFactory.random_mixed_timescale(rng)
    x0 = float(rng.uniform(0.2, 1.0))
    y0 = float(rng.uniform(0.01, 0.5))
    share = x0 / (x0 + y0)

    b_values = rng.uniform(0.05, 0.4, size=13)
    if bracketed:
        c_values = b_values * (share + (1.0 - share) * rng.uniform(0.05, 0.95, size=13))
    else:
        c_values = b_values + rng.uniform(0.01, 0.5, size=13)

    b = ts.tabulated([(float(k), float(v)) for k, v in enumerate(b_values)])
    c = ts.tabulated([(float(k), float(v)) for k, v in enumerate(c_values)])
    return ts.make_scenario(scale, b, c, x0, y0, float(rng.uniform(0.0, 0.2)))


class TestMonotonicity:
    """Test when the infected compartment is guaranteed to decrease."""

    @pytest.mark.unit
    def test_removal_dominates(self):
        report = ts.monotonicity_report(TestScenarioFactory.ex29(0.3, horizon=100), 100, 1.0)

        assert report.removal_dominates_everywhere
        assert report.decrease_verified
        assert report.share_nondecreasing
        assert not report.initial_growth_predicted

    @pytest.mark.unit
    def test_initial_growth(self, ex19_discrete, test_constants):
        report = ts.monotonicity_report(ex19_discrete, 24, 1.0)

        assert report.initial_growth_predicted
        assert not report.initial_growth_boundary
        assert report.initial_slope == pytest.approx(test_constants.EX19_Y1 - 0.2)
        assert report.initial_slope_consistent
        assert not report.points[0].predicts_decrease

    @pytest.mark.unit
    def test_equal_rates_sit_on_both_hypotheses(self, hybrid_timescale):
        scenario = ts.make_scenario(
            hybrid_timescale, ts.constant(0.3), ts.constant(0.3), 0.6, 0.3, 0.1
        )
        report = ts.monotonicity_report(scenario, 24, MONOTONICITY_STEP)

        assert report.removal_dominates_everywhere
        assert report.removal_bracketed_everywhere
        assert report.decrease_verified
        assert all(np.diff(ts.solve(scenario, 24, MONOTONICITY_STEP, ts.SolutionMethod.CLOSED_FORM).y) < 0)

    @pytest.mark.unit
    def test_bracket_needs_removal_below_transmission_since_t0(self):
        """After a removal-dominated start the share exceeds x0/(x0+y0) and y may grow."""
        c = ts.tabulated([(0.0, 1.0), (9.0, 1.0), (10.0, 0.3), (100.0, 0.3)])
        scenario = ts.make_scenario(ts.integer_range(0, 40), ts.constant(0.4), c, 0.5, 0.5)
        series = ts.solve(scenario, 40, 1.0, ts.SolutionMethod.CLOSED_FORM)
        report = ts.monotonicity_report(scenario, 40, 1.0, series=series)

        assert series.y[11] > series.y[10]
        assert report.points[9].removal_dominates
        assert not report.points[10].removal_bracketed
        assert not any(p.predicts_decrease for p in report.points[10:])
        assert report.decrease_verified

    @pytest.mark.unit
    def test_reuses_a_given_series(self, ex19_hybrid):
        series = ts.solve(ex19_hybrid, 24, 0.5, ts.SolutionMethod.RECURSION)
        report = ts.monotonicity_report(ex19_hybrid, 24, 0.5, series=series)

        assert len(report.points) == len(series.samples)
        assert [p.t for p in report.points] == list(series.times)

    @pytest.mark.slow
    @pytest.mark.parametrize("seed", range(20))
    def test_random_removal_dominated_scenarios(self, seed):
        scenario = _random_regime_scenario(np.random.default_rng(seed), bracketed=False)
        report = ts.monotonicity_report(scenario, scenario.ts.max, MONOTONICITY_STEP)

        assert report.removal_dominates_everywhere
        assert report.decrease_verified
        assert report.share_nondecreasing

    @pytest.mark.slow
    @pytest.mark.parametrize("seed", range(20))
    def test_random_bracketed_scenarios(self, seed):
        scenario = _random_regime_scenario(np.random.default_rng(100 + seed), bracketed=True)
        report = ts.monotonicity_report(scenario, scenario.ts.max, MONOTONICITY_STEP)

        assert report.removal_bracketed_everywhere
        assert report.decrease_verified

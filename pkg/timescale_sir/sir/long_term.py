import dataclasses
import enum
import math
from typing import List, Optional, Tuple

import numpy as np

from timescale_sir.calculus.exponential import check_regressive, circle_minus_fn
from timescale_sir.calculus.timescale import (
    cumulative_delta_integral,
    evaluate_on,
    grid,
    grid_point,
)
from timescale_sir.errors import NonRegressiveError
from timescale_sir.logger import timescale_sir_logger as logger
from timescale_sir.sir.model import (
    SirScenario,
    SirState,
    SolutionMethod,
    SolutionSeries,
)
from timescale_sir.sir.recursion import solve

# Finite-horizon stand-ins for improper integrals
DIVERGENCE_THRESHOLD = 50.0
TREND_TOLERANCE = 1e-6
BOUNDED_VARIATION_TOLERANCE = 1e-6

# Fraction of [t0, horizon] whose trend the numeric tests look at
TAIL_FRACTION = 0.1

MONOTONICITY_TOLERANCE = 1e-12


@dataclasses.dataclass(frozen=True)
class EquilibriumPlane:
    """The rest states (alpha, 0, N - alpha), alpha in [0, N]."""

    total: float

    def point(self, alpha: float) -> SirState:
        if not 0 <= alpha <= self.total:
            raise ValueError(f"alpha must lie in [0, {self.total}], got {alpha!r}")
        return SirState(alpha, 0.0, self.total - alpha)

    def nearest(self, state: SirState) -> SirState:
        alpha = (state.x - state.z + self.total) / 2.0
        return self.point(min(max(alpha, 0.0), self.total))

    def distance(self, state: SirState) -> float:
        """Euclidean distance from state to the plane segment."""
        nearest = self.nearest(state)
        return math.dist(state.as_tuple(), nearest.as_tuple())

    def contains(self, state: SirState, tolerance: float = 1e-9) -> bool:
        """Membership test with an absolute tolerance scaled by N."""
        return self.distance(state) <= tolerance * self.total


def equilibria(total: float) -> EquilibriumPlane:
    """The equilibrium set of the SIR system with conserved total N.

    Raises:
        ValueError: If N is not positive
    """
    if not (math.isfinite(total) and total > 0):
        raise ValueError(f"N must be positive and finite, got {total!r}")
    return EquilibriumPlane(float(total))


class LimitOutcome(enum.Enum):
    ALL_REMOVED = "DiseaseFree_AllRemoved"
    PARTIAL_SUSCEPTIBLE = "DiseaseFree_PartialSusceptible"
    UNDETERMINED = "Undetermined"


class Certificate(enum.Enum):
    DIVERGENT_TRANSMISSION = "Thm_AddBT1"
    DIVERGENT_REMOVAL = "Thm_AddBT2"
    CONSTANT_COEFFICIENTS = "Corollary_ConstantCoeffs"
    NUMERIC_ONLY = "NumericOnly"


@dataclasses.dataclass(frozen=True)
class LimitClassification:
    """Limit of a trajectory and what certifies it.

    Attributes:
        outcome: Which equilibrium the trajectory tends to
        certificate: Analytic certificate, or NumericOnly
        alpha_estimate: x at the horizon, for PartialSusceptible
        alpha_lower_bound: x0 exp(-k M) when a ratio bound M is known
        theorem: For NumericOnly passes, the result whose hypotheses were checked
        terminal_state: State at the horizon
        horizon: Working horizon
    """

    outcome: LimitOutcome
    certificate: Certificate
    alpha_estimate: Optional[float] = None
    alpha_lower_bound: Optional[float] = None
    theorem: Optional[Certificate] = None
    terminal_state: Optional[SirState] = None
    horizon: Optional[float] = None

    def limit(self, total: float) -> Optional[SirState]:
        """The equilibrium the outcome points at, None when undetermined."""
        if self.outcome is LimitOutcome.ALL_REMOVED:
            return SirState(0.0, 0.0, total)
        if self.outcome is LimitOutcome.PARTIAL_SUSCEPTIBLE:
            return SirState(self.alpha_estimate, 0.0, total - self.alpha_estimate)
        return None


@dataclasses.dataclass(frozen=True)
class _IntegralTrend:
    final: float
    tail_rate: float
    tail_positive_variation: float

    @property
    def bounded(self) -> bool:
        return self.tail_positive_variation < BOUNDED_VARIATION_TOLERANCE

    @property
    def divergent(self) -> bool:
        return self.final >= DIVERGENCE_THRESHOLD and self.tail_rate > TREND_TOLERANCE


def _integral_trend(sc: SirScenario, f, horizon: float, h: float) -> _IntegralTrend:
    times, values = cumulative_delta_integral(sc.ts, f, sc.t0, horizon, h)
    tail_start = sc.t0 + (1.0 - TAIL_FRACTION) * (horizon - sc.t0)
    tail = times >= tail_start
    tail_times, tail_values = times[tail], values[tail]

    span = tail_times[-1] - tail_times[0]
    rate = (tail_values[-1] - tail_values[0]) / span if span > 0 else 0.0
    increments = np.diff(tail_values)
    return _IntegralTrend(
        final=float(values[-1]),
        tail_rate=float(rate),
        tail_positive_variation=float(np.sum(increments[increments > 0])),
    )


def _ratio_bound(sc: SirScenario, horizon: float, h: float) -> Optional[float]:
    """sup b / (c - b) over the grid, None when c <= b somewhere with b > 0."""
    times = np.array([p.t for p in grid(sc.ts, sc.t0, horizon, h)])
    b = evaluate_on(sc.b, times)
    gap = evaluate_on(sc.c, times) - b

    if np.any((gap <= 0) & (b > 0)):
        return None
    ratios = np.divide(b, gap, out=np.zeros_like(b), where=gap > 0)
    return float(np.max(ratios))


def _terminal_state(sc: SirScenario, horizon: float, h: float) -> SirState:
    return solve(sc, horizon, h, SolutionMethod.CLOSED_FORM).final


def _classify_constant(
    sc: SirScenario, horizon: float, terminal: SirState
) -> LimitClassification:
    b, c = sc.b.constant_value, sc.c.constant_value
    x0, kappa = sc.init.x, sc.kappa

    if c > 0 and b >= c:
        return LimitClassification(
            outcome=LimitOutcome.ALL_REMOVED,
            certificate=Certificate.CONSTANT_COEFFICIENTS,
            terminal_state=terminal,
            horizon=horizon,
        )
    if b < c:
        bound = b / (c - b)
        return LimitClassification(
            outcome=LimitOutcome.PARTIAL_SUSCEPTIBLE,
            certificate=Certificate.CONSTANT_COEFFICIENTS,
            alpha_estimate=terminal.x,
            alpha_lower_bound=x0 * math.exp(-kappa * bound),
            terminal_state=terminal,
            horizon=horizon,
        )
    return LimitClassification(
        outcome=LimitOutcome.UNDETERMINED,
        certificate=Certificate.NUMERIC_ONLY,
        terminal_state=terminal,
        horizon=horizon,
    )


def _classify_numeric(
    sc: SirScenario, horizon: float, h: float, terminal: SirState
) -> LimitClassification:
    removal_excess = _integral_trend(sc, sc.c_minus_b, horizon, h)
    # b / (1 + mu (c - b)) = c ⊖ (c - b)
    damped_transmission = _integral_trend(
        sc, circle_minus_fn(sc.c, sc.c_minus_b, sc.ts), horizon, h
    )

    if removal_excess.bounded and damped_transmission.divergent:
        return LimitClassification(
            outcome=LimitOutcome.ALL_REMOVED,
            certificate=Certificate.NUMERIC_ONLY,
            theorem=Certificate.DIVERGENT_TRANSMISSION,
            terminal_state=terminal,
            horizon=horizon,
        )

    bound = _ratio_bound(sc, horizon, h)
    if bound is not None and removal_excess.divergent:
        return LimitClassification(
            outcome=LimitOutcome.PARTIAL_SUSCEPTIBLE,
            certificate=Certificate.NUMERIC_ONLY,
            alpha_estimate=terminal.x,
            alpha_lower_bound=sc.init.x * math.exp(-sc.kappa * bound),
            theorem=Certificate.DIVERGENT_REMOVAL,
            terminal_state=terminal,
            horizon=horizon,
        )

    return LimitClassification(
        outcome=LimitOutcome.UNDETERMINED,
        certificate=Certificate.NUMERIC_ONLY,
        terminal_state=terminal,
        horizon=horizon,
    )


def classify_limit(sc: SirScenario, horizon: float, h: float) -> LimitClassification:
    """Classifies the limit of the scenario's trajectory.

    Constant coefficients are certified analytically: b >= c > 0 removes
    everyone, b < c leaves alpha >= x0 exp(-k b / (c - b)) susceptibles.
    Time-varying coefficients are tested numerically over [t0, horizon]:
    a bounded integral of c - b with a divergent integral of
    b / (1 + mu (c - b)) gives (0, 0, N); b <= M (c - b) with a divergent
    integral of c - b gives (alpha, 0, N - alpha).

    Args:
        sc: Scenario
        horizon: Working horizon, in sc.ts and >= t0
        h: Grid step on continuous parts

    Returns:
        A LimitClassification

    Raises:
        NonRegressiveError: If c - b is not positively regressive on the grid
    """
    horizon = grid_point(sc.ts, horizon).t
    if horizon < sc.t0:
        raise ValueError(f"horizon={horizon!r} precedes t0={sc.t0!r}")

    report = check_regressive(sc.c_minus_b, sc.ts, sc.t0, horizon, h)
    if not report.positively_regressive:
        raise NonRegressiveError(
            "c - b is not positively regressive", witness_t=report.witness_t
        )

    terminal = _terminal_state(sc, horizon, h)
    if sc.has_constant_coefficients:
        classification = _classify_constant(sc, horizon, terminal)
    else:
        classification = _classify_numeric(sc, horizon, h, terminal)

    logger.info(
        "Limit on [%s, %s]: %s (%s)",
        sc.t0,
        horizon,
        classification.outcome.value,
        classification.certificate.value,
    )
    return classification


@dataclasses.dataclass(frozen=True)
class RegimePoint:
    """Monotonicity hypotheses at one grid point.

    Attributes:
        t: Grid time
        removal_dominates: c(t) >= b(t)
        removal_bracketed: x0/(x0+y0) b(t) <= c(t), and c <= b at every grid
            point from t0 through t
        y_nonincreasing: y at the next sample does not exceed y(t)
    """

    t: float
    removal_dominates: bool
    removal_bracketed: bool
    y_nonincreasing: bool

    @property
    def predicts_decrease(self) -> bool:
        return self.removal_dominates or self.removal_bracketed


@dataclasses.dataclass(frozen=True)
class MonotonicityReport:
    """Which decrease hypotheses hold along a solution, and whether y obeys them.

    Attributes:
        points: Per grid point hypotheses and observed monotonicity
        initial_growth_predicted: x0/(x0+y0) b(t0) >= c(t0)
        initial_growth_boundary: The previous inequality holds with equality
        initial_slope: Observed (y(t1) - y(t0)) / (t1 - t0)
        violations: Times where a predicted decrease of y was not observed
        share_nondecreasing: x/(x+y) never decreases across steps where c >= b
    """

    points: Tuple[RegimePoint, ...]
    initial_growth_predicted: bool
    initial_growth_boundary: bool
    initial_slope: float
    violations: Tuple[float, ...]
    share_nondecreasing: bool

    @property
    def removal_dominates_everywhere(self) -> bool:
        return all(p.removal_dominates for p in self.points)

    @property
    def removal_bracketed_everywhere(self) -> bool:
        return all(p.removal_bracketed for p in self.points)

    @property
    def decrease_verified(self) -> bool:
        return not self.violations

    @property
    def initial_slope_consistent(self) -> bool:
        return not self.initial_growth_predicted or self.initial_slope >= -(
            MONOTONICITY_TOLERANCE
        )


def monotonicity_report(
    sc: SirScenario,
    t_end: float,
    h: float,
    series: Optional[SolutionSeries] = None,
) -> MonotonicityReport:
    """Checks the decrease hypotheses for y along the computed series.

    y is predicted nonincreasing at t when c(t) >= b(t), or when
    x0/(x0+y0) b(t) <= c(t) and c <= b has held on [t0, t]; it is predicted
    to grow initially when x0/(x0+y0) b(t0) >= c(t0).

    Args:
        sc: Scenario
        t_end: Last time of the checked range
        h: Grid step on continuous parts
        series: An already computed series over the same grid, solved with
            the closed form when omitted
    """
    if series is None:
        series = solve(sc, t_end, h, SolutionMethod.CLOSED_FORM)

    times, x, y = series.times, series.x, series.y
    b = evaluate_on(sc.b, times)
    c = evaluate_on(sc.c, times)
    initial_share = sc.init.x / (sc.init.x + sc.init.y)
    tolerance = MONOTONICITY_TOLERANCE * sc.total

    step_ok = np.append(y[1:] <= y[:-1] + tolerance, True)
    dominates = c >= b
    # x/(x+y) <= x0/(x0+y0) only while c <= b on [t0, t]
    bracketed = (initial_share * b <= c) & np.logical_and.accumulate(c <= b)

    points: List[RegimePoint] = [
        RegimePoint(float(t), bool(d), bool(r), bool(ok))
        for t, d, r, ok in zip(times, dominates, bracketed, step_ok)
    ]
    violations = tuple(p.t for p in points if p.predicts_decrease and not p.y_nonincreasing)

    share = x / (x + y)
    share_ok = np.append(share[1:] >= share[:-1] - MONOTONICITY_TOLERANCE, True)
    share_nondecreasing = bool(np.all(share_ok[dominates]))

    growth_margin = initial_share * b[0] - c[0]
    if len(times) > 1:
        initial_slope = float((y[1] - y[0]) / (times[1] - times[0]))
    else:
        initial_slope = 0.0

    report = MonotonicityReport(
        points=tuple(points),
        initial_growth_predicted=bool(growth_margin >= -MONOTONICITY_TOLERANCE),
        initial_growth_boundary=bool(abs(growth_margin) <= MONOTONICITY_TOLERANCE),
        initial_slope=initial_slope,
        violations=violations,
        share_nondecreasing=share_nondecreasing,
    )
    if violations:
        logger.warning(
            "y increased at %d point(s) where it should not, first t=%s",
            len(violations),
            violations[0],
        )
    return report

import dataclasses
import math
import sys
from typing import List, Optional, Tuple, Union

import numpy as np
from scipy.integrate import simpson

from timescale_sir.calculus.timescale import (
    ScalarFunction,
    TimeScale,
    dense_part,
    dense_pieces,
    evaluate_on,
    grid,
    grid_point,
    interval_nodes,
    mu,
    scattered_points,
    simpson_cumulative,
    simpson_integral,
)
from timescale_sir.errors import ExponentialOverflowError, NonRegressiveError
from timescale_sir.logger import timescale_sir_logger as logger

# |1 + mu p| at or below this is treated as zero
REGRESSIVITY_TOLERANCE = 1e-10

LOG_FLOAT_MAX = math.log(sys.float_info.max)

Number = Union[float, np.ndarray]


@dataclasses.dataclass(frozen=True)
class RegressivityReport:
    """Result of check_regressive over a grid.

    Attributes:
        regressive: 1 + mu p stays away from 0
        positively_regressive: 1 + mu p stays above 0
        min_abs_1_plus_mu_p: Smallest |1 + mu(t) p(t)| on the grid
        min_1_plus_mu_p: Smallest 1 + mu(t) p(t) on the grid
        witness_t: First grid time violating regressivity, else the first
            violating positivity, else None
    """

    regressive: bool
    positively_regressive: bool
    min_abs_1_plus_mu_p: float
    min_1_plus_mu_p: float
    witness_t: Optional[float] = None


def check_regressive(
    p: ScalarFunction, ts: TimeScale, t0: float, t1: float, h: float
) -> RegressivityReport:
    """Evaluates 1 + mu(t) p(t) over grid(ts, t0, t1, h).

    Args:
        p: Rd-continuous scalar function
        ts: Time scale
        t0: Start of the checked range
        t1: End of the checked range
        h: Grid step on continuous parts

    Returns:
        A RegressivityReport with the minima and the first violating time
    """
    points = grid(ts, t0, t1, h)
    factors = np.ones(len(points))

    scattered = [k for k, point in enumerate(points) if point.is_scattered]
    if scattered:
        times = np.array([points[k].t for k in scattered])
        graininess = np.array([points[k].mu_t for k in scattered])
        factors[scattered] = 1.0 + graininess * evaluate_on(p, times)

    not_regressive = ~(np.abs(factors) > REGRESSIVITY_TOLERANCE)
    not_positive = ~(factors > REGRESSIVITY_TOLERANCE)

    witness = None
    if np.any(not_regressive):
        witness = points[int(np.argmax(not_regressive))].t
    elif np.any(not_positive):
        witness = points[int(np.argmax(not_positive))].t

    report = RegressivityReport(
        regressive=not bool(np.any(not_regressive)),
        positively_regressive=not bool(np.any(not_positive)),
        min_abs_1_plus_mu_p=float(np.min(np.abs(factors))),
        min_1_plus_mu_p=float(np.min(factors)),
        witness_t=witness,
    )
    logger.debug(
        "Regressivity on [%s, %s]: min 1+mu*p = %s, witness %s",
        t0,
        t1,
        report.min_1_plus_mu_p,
        witness,
    )
    return report


def circle_plus(p: Number, q: Number, mu: Number) -> Number:
    """p ⊕ q = p + q + mu p q"""
    return p + q + mu * p * q


def circle_minus(p: Number, q: Number, mu: Number) -> Number:
    """p ⊖ q = (p - q) / (1 + mu q)

    Raises:
        NonRegressiveError: If 1 + mu q vanishes
    """
    denominator = 1.0 + np.asarray(mu) * np.asarray(q)
    if np.any(np.abs(denominator) <= REGRESSIVITY_TOLERANCE):
        raise NonRegressiveError(f"1 + mu*q vanishes for q={q!r}, mu={mu!r}")
    result = (p - q) / denominator
    return float(result) if np.ndim(result) == 0 else result


def _as_function(value) -> ScalarFunction:
    if callable(value):
        return value
    constant = float(value)
    return lambda t: np.full(np.shape(t), constant) if np.ndim(t) else constant


@dataclasses.dataclass(frozen=True)
class PointwiseOperation:
    """p ⊕ q or p ⊖ q formed with the graininess of a time scale.

    Calling the object uses mu(t) of the scale, `dense` is the same
    combination with mu = 0 and is what quadrature integrates on continuous
    parts, where the value at a right-scattered interval end must not leak in.
    """

    operator: str
    p: ScalarFunction
    q: ScalarFunction
    ts: TimeScale

    def _combine(self, p_values, q_values, graininess):
        if self.operator == "plus":
            return circle_plus(p_values, q_values, graininess)
        return circle_minus(p_values, q_values, graininess)

    def __call__(self, t: Number) -> Number:
        times = np.asarray(t, dtype=float)
        graininess = np.vectorize(lambda s: mu(self.ts, s), otypes=[float])(times)
        result = self._combine(
            evaluate_on(self.p, times), evaluate_on(self.q, times), graininess
        )
        return float(result) if np.ndim(result) == 0 else result

    def dense(self, t: Number) -> Number:
        times = np.asarray(t, dtype=float)
        result = self._combine(
            evaluate_on(dense_part(self.p), times),
            evaluate_on(dense_part(self.q), times),
            0.0,
        )
        return float(result) if np.ndim(result) == 0 else result


def circle_plus_fn(p, q, ts: TimeScale) -> PointwiseOperation:
    """The function t -> p(t) ⊕ q(t) on ts. Numbers are read as constants."""
    return PointwiseOperation("plus", _as_function(p), _as_function(q), ts)


def circle_minus_fn(p, q, ts: TimeScale) -> PointwiseOperation:
    """The function t -> p(t) ⊖ q(t) on ts; circle_minus_fn(0, q, ts) is ⊖q."""
    return PointwiseOperation("minus", _as_function(p), _as_function(q), ts)


def _log_exponential(
    p: ScalarFunction, ts: TimeScale, a: float, b: float, h: float
) -> Tuple[float, float]:
    """Returns (log|e_p(b, a)|, sign of e_p(b, a)) for a <= b."""
    log_magnitude = sum(
        simpson_integral(dense_part(p), lo, hi, h) for lo, hi in dense_pieces(ts, a, b)
    )
    sign = 1.0

    for t, graininess in scattered_points(ts, a, b):
        factor = 1.0 + graininess * float(p(t))
        if not abs(factor) > REGRESSIVITY_TOLERANCE:
            raise NonRegressiveError("1 + mu(t) p(t) vanishes", witness_t=t)
        log_magnitude += math.log(abs(factor))
        if factor < 0:
            sign = -sign

    return log_magnitude, sign


def _from_log(log_magnitude: float, sign: float, what: str) -> float:
    if log_magnitude > LOG_FLOAT_MAX:
        raise ExponentialOverflowError(
            f"{what} overflows (log magnitude {log_magnitude:.6g})"
        )
    return sign * math.exp(log_magnitude)


def ts_exp(p: ScalarFunction, ts: TimeScale, t: float, t0: float, h: float) -> float:
    """Time scale exponential e_p(t, t0).

    For t >= t0 this is the product of (1 + mu(s) p(s)) over right-scattered
    s in [t0, t) times exp of the Simpson integral of p over the continuous
    parts of [t0, t]. For t < t0 the reciprocal e_p(t0, t) is returned.

    Args:
        p: Regressive rd-continuous function
        ts: Time scale
        t: Evaluation time, in ts
        t0: Initial time, in ts
        h: Quadrature panel width on continuous parts

    Returns:
        e_p(t, t0)

    Raises:
        NotInDomainError: If t or t0 is not in ts
        NonRegressiveError: If p is not regressive between t0 and t
        ExponentialOverflowError: If the result does not fit a float
    """
    t = grid_point(ts, t).t
    t0 = grid_point(ts, t0).t

    if t >= t0:
        log_magnitude, sign = _log_exponential(p, ts, t0, t, h)
    else:
        log_magnitude, sign = _log_exponential(p, ts, t, t0, h)
        log_magnitude = -log_magnitude

    return _from_log(log_magnitude, sign, f"e_p({t}, {t0})")


def ts_exp_sigma(
    p: ScalarFunction, ts: TimeScale, t: float, t0: float, h: float
) -> float:
    """e_p(sigma(t), t0), as e_p(t, t0) (1 + mu(t) p(t)).

    Raises:
        As ts_exp
    """
    point = grid_point(ts, t)
    value = ts_exp(p, ts, point.t, t0, h)
    if not point.is_scattered:
        return value

    factor = 1.0 + point.mu_t * float(p(point.t))
    if not abs(factor) > REGRESSIVITY_TOLERANCE:
        raise NonRegressiveError("1 + mu(t) p(t) vanishes", witness_t=point.t)

    result = value * factor
    if not math.isfinite(result):
        raise ExponentialOverflowError(f"e_p(sigma({point.t}), {t0}) overflows")
    return result


def _linear_on_interval(
    p: ScalarFunction, f: ScalarFunction, lo: float, hi: float, y_lo: float, h: float
) -> float:
    """Solves y' = p y + f on [lo, hi] by variation of constants."""
    n = max(1, len(interval_nodes(lo, hi, h)) - 1)
    fine = lo + (hi - lo) * np.arange(2 * n + 1) / (2 * n)
    fine[-1] = hi

    accumulated = simpson_cumulative(p, fine)
    with np.errstate(over="ignore"):
        weighted = np.exp(-accumulated) * evaluate_on(f, fine)
    forcing = float(simpson(weighted, x=fine))

    return math.exp(accumulated[-1]) * (y_lo + forcing)


def solve_linear_dynamic(
    p: ScalarFunction,
    f: ScalarFunction,
    ts: TimeScale,
    y0: float,
    t0: float,
    t: float,
    h: float,
) -> float:
    """Solves y^Δ = p(t) y + f(t), y(t0) = y0, and returns y(t).

    Scattered points use the exact step y(sigma(s)) = (1 + mu p) y + mu f,
    continuous parts use variation of constants with Simpson quadrature.

    Raises:
        NotInDomainError: If t or t0 is not in ts
        ValueError: If t < t0
        NonRegressiveError: If p is not regressive on [t0, t)
    """
    t = grid_point(ts, t).t
    t0 = grid_point(ts, t0).t
    if t < t0:
        raise ValueError(f"solve_linear_dynamic requires t >= t0, got t={t}, t0={t0}")

    p, f = _as_function(p), _as_function(f)
    dense_p, dense_f = dense_part(p), dense_part(f)

    steps: List[Tuple[float, int, float]] = [
        (lo, 0, hi) for lo, hi in dense_pieces(ts, t0, t)
    ] + [(s, 1, m) for s, m in scattered_points(ts, t0, t)]
    steps.sort()

    y = float(y0)
    for start, is_jump, extent in steps:
        if is_jump:
            factor = 1.0 + extent * float(p(start))
            if not abs(factor) > REGRESSIVITY_TOLERANCE:
                raise NonRegressiveError("1 + mu(t) p(t) vanishes", witness_t=start)
            y = factor * y + extent * float(f(start))
        else:
            y = _linear_on_interval(dense_p, dense_f, start, extent, y, h)

    return y

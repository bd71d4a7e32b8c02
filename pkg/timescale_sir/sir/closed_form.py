"""Closed form solutions of the SIR system.

On an arbitrary time scale, with E = e_{c-b}(., t0), G = e_g(., t0) and

    g(t) = b(t) k / (k (1 + mu(t) (c - b)(t)) + E(sigma(t))),   k = y0 / x0,

the solution is x = x0 / G and y = y0 / (G E), with z closing the total.
The continuous and integer special cases are evaluated directly from their
own formulas and serve as cross-checks of the general one.
"""
import math
from typing import List, Sequence, Tuple

import numpy as np
from scipy.integrate import simpson

from timescale_sir.calculus.exponential import (
    REGRESSIVITY_TOLERANCE,
    ts_exp_sigma,
)
from timescale_sir.calculus.timescale import (
    GridPoint,
    evaluate_on,
    grid,
    grid_point,
    interval_nodes,
    simpson_cumulative,
)
from timescale_sir.errors import (
    CoefficientError,
    ExponentialOverflowError,
    NonRegressiveError,
    WrongDomainError,
)
from timescale_sir.logger import timescale_sir_logger as logger
from timescale_sir.sir.model import SirScenario, SirState, validate_initial_state

# Above this exponent the logaddexp form of the constant solution is used
_EXPM1_LIMIT = 30.0


def _cancels(first, second):
    """Whether first + second is lost to cancellation between the two terms."""
    total = first + second
    return np.isfinite(total) & (
        np.abs(total) <= REGRESSIVITY_TOLERANCE * (np.abs(first) + np.abs(second))
    )


def g_function(sc: SirScenario, t: float, h: float) -> float:
    """The auxiliary rate g(t) of the general closed form.

    Args:
        sc: Scenario
        t: Time in sc.ts
        h: Quadrature panel width for e_{c-b}

    Returns:
        b(t) k / (k (1 + mu(t) (c-b)(t)) + e_{c-b}(sigma(t), t0))

    Raises:
        NonRegressiveError: If c - b is not regressive between t0 and t, or
            the two terms of the denominator cancel within REGRESSIVITY_TOLERANCE
    """
    point = grid_point(sc.ts, t)
    kappa = sc.kappa
    e_sigma = ts_exp_sigma(sc.c_minus_b, sc.ts, point.t, sc.t0, h)

    scaled_factor = kappa * (1.0 + point.mu_t * float(sc.c_minus_b(point.t)))
    if _cancels(scaled_factor, e_sigma):
        raise NonRegressiveError("g is unbounded", witness_t=point.t)
    return float(sc.b(point.t)) * kappa / (scaled_factor + e_sigma)


def _g_values(b_values, kappa, factor_e, log_e_sigma, sign_e_sigma, witness):
    with np.errstate(over="ignore"):
        e_sigma = sign_e_sigma * np.exp(log_e_sigma)
    if np.any(_cancels(kappa * factor_e, e_sigma)):
        raise NonRegressiveError("g is unbounded", witness_t=witness)
    with np.errstate(divide="ignore", invalid="ignore"):
        values = b_values * kappa / (kappa * factor_e + e_sigma)
    if not np.all(np.isfinite(values)):
        raise NonRegressiveError("g is not finite", witness_t=witness)
    return values


def _log_factor(factor: float, what: str, t: float) -> Tuple[float, float]:
    if not abs(factor) > REGRESSIVITY_TOLERANCE:
        raise NonRegressiveError(f"1 + mu(t) {what}(t) vanishes", witness_t=t)
    return math.log(abs(factor)), math.copysign(1.0, factor)


class _ExponentialWalk:
    """log|E|, sign E, log|G| and sign G at every point of a grid.

    Scattered steps multiply by the exact one-step factors. Runs of dense
    steps are integrated together: Simpson panels over the grid spacing, with
    E at panel midpoints obtained from a half-panel Simpson rule.
    """

    def __init__(self, sc: SirScenario, points: Sequence[GridPoint]):
        self.sc = sc
        self.points = points
        self.times = np.array([p.t for p in points])

        n = len(points)
        self.log_e = np.zeros(n)
        self.sign_e = np.ones(n)
        self.log_g = np.zeros(n)
        self.sign_g = np.ones(n)

    def run(self) -> "_ExponentialWalk":
        k, last = 0, len(self.points) - 1
        while k < last:
            if self.points[k].is_scattered:
                self._scattered_step(k)
                k += 1
            else:
                end = k
                while end < last and self.points[end].is_dense:
                    end += 1
                self._dense_run(k, end)
                k = end
        return self

    def _scattered_step(self, k: int):
        sc, point = self.sc, self.points[k]
        kappa = sc.kappa

        factor_e = 1.0 + point.mu_t * float(sc.c_minus_b(point.t))
        log_factor_e, sign_factor_e = _log_factor(factor_e, "(c-b)", point.t)
        log_e_sigma = self.log_e[k] + log_factor_e
        sign_e_sigma = self.sign_e[k] * sign_factor_e

        g = float(
            _g_values(
                float(sc.b(point.t)),
                kappa,
                factor_e,
                log_e_sigma,
                sign_e_sigma,
                point.t,
            )
        )
        log_factor_g, sign_factor_g = _log_factor(1.0 + point.mu_t * g, "g", point.t)

        self.log_e[k + 1] = log_e_sigma
        self.sign_e[k + 1] = sign_e_sigma
        self.log_g[k + 1] = self.log_g[k] + log_factor_g
        self.sign_g[k + 1] = self.sign_g[k] * sign_factor_g

    def _dense_run(self, start: int, end: int):
        sc, kappa = self.sc, self.sc.kappa
        nodes = self.times[start : end + 1]
        left, right = nodes[:-1], nodes[1:]
        width = right - left
        middle = left + width / 2.0

        p_nodes = evaluate_on(sc.c_minus_b, nodes)
        p_middle = evaluate_on(sc.c_minus_b, middle)
        p_quarter = evaluate_on(sc.c_minus_b, left + width / 4.0)

        full_panel = width / 6.0 * (p_nodes[:-1] + 4.0 * p_middle + p_nodes[1:])
        half_panel = width / 12.0 * (p_nodes[:-1] + 4.0 * p_quarter + p_middle)

        log_e_nodes = self.log_e[start] + np.concatenate(([0.0], np.cumsum(full_panel)))
        log_e_middle = log_e_nodes[:-1] + half_panel
        sign_e = self.sign_e[start]

        witness = float(nodes[0])
        g_nodes = _g_values(
            evaluate_on(sc.b, nodes), kappa, 1.0, log_e_nodes, sign_e, witness
        )
        g_middle = _g_values(
            evaluate_on(sc.b, middle), kappa, 1.0, log_e_middle, sign_e, witness
        )
        g_panel = width / 6.0 * (g_nodes[:-1] + 4.0 * g_middle + g_nodes[1:])

        self.log_e[start : end + 1] = log_e_nodes
        self.sign_e[start : end + 1] = sign_e
        self.log_g[start : end + 1] = self.log_g[start] + np.concatenate(
            ([0.0], np.cumsum(g_panel))
        )
        self.sign_g[start : end + 1] = self.sign_g[start]

    def states(self) -> List[SirState]:
        x0, y0, z0 = self.sc.init.as_tuple()
        with np.errstate(over="ignore", under="ignore"):
            x = x0 * self.sign_g * np.exp(-self.log_g)
            y = y0 * self.sign_g * self.sign_e * np.exp(-self.log_g - self.log_e)

        bad = ~(np.isfinite(x) & np.isfinite(y))
        if np.any(bad):
            raise ExponentialOverflowError(
                f"Closed form overflows at t={float(self.times[bad][0])!r}"
            )

        z = z0 + (x0 - x) + (y0 - y)
        states = [SirState(float(a), float(b), float(c)) for a, b, c in zip(x, y, z)]
        states[0] = self.sc.init
        return states


def closed_form_states(sc: SirScenario, points: Sequence[GridPoint]) -> List[SirState]:
    """Closed form state at every grid point; points must start at sc.t0.

    Raises:
        ValueError: If the grid does not start at t0
        NonRegressiveError: If c - b or g is not regressive on the grid
        ExponentialOverflowError: If a state does not fit a float
    """
    if not points or abs(points[0].t - sc.t0) > 1e-12:
        raise ValueError(f"Closed form grid must start at t0={sc.t0!r}")

    walk = _ExponentialWalk(sc, points).run()
    logger.debug(
        "Closed form walk over %d points, final log e_(c-b)=%s, log e_g=%s",
        len(points),
        walk.log_e[-1],
        walk.log_g[-1],
    )
    return walk.states()


def closed_form_timescale(sc: SirScenario, t: float, h: float) -> SirState:
    """Solution of the SIR system at time t on an arbitrary time scale.

    Args:
        sc: Scenario
        t: Time in sc.ts, t >= t0
        h: Grid step on continuous parts

    Returns:
        (x, y, z) at t

    Raises:
        NotInDomainError: If t is not in sc.ts
        ValueError: If t < t0
        NonRegressiveError: If c - b or g is not regressive on [t0, t]
    """
    points = grid(sc.ts, sc.t0, t, h)
    return closed_form_states(sc, points)[-1]


def closed_form_continuous(sc: SirScenario, t: float, h: float) -> SirState:
    """Integral form of the solution on a single real interval.

    With A(t) the integral of b - c from t0 and
    Q(t) the integral of b k e^A / (1 + k e^A),
    x = x0 e^-Q and y = y0 e^(A - Q).

    Raises:
        WrongDomainError: If sc.ts is not a single interval
        NotInDomainError: If t is not in sc.ts
        ValueError: If t < t0
    """
    if not sc.ts.is_single_interval:
        raise WrongDomainError("closed_form_continuous needs a single real interval")

    t = grid_point(sc.ts, t).t
    if t < sc.t0:
        raise ValueError(f"t={t!r} precedes t0={sc.t0!r}")
    if t == sc.t0:
        return sc.init

    n = len(interval_nodes(sc.t0, t, h)) - 1
    fine = sc.t0 + (t - sc.t0) * np.arange(2 * n + 1) / (2 * n)
    fine[-1] = t

    kappa = sc.kappa
    growth = simpson_cumulative(lambda s: sc.b(s) - sc.c(s), fine)
    with np.errstate(over="ignore"):
        integrand = evaluate_on(sc.b, fine) * kappa / (np.exp(-growth) + kappa)
    removal = float(simpson(integrand, x=fine))

    x0, y0, z0 = sc.init.as_tuple()
    try:
        x = x0 * math.exp(-removal)
        y = y0 * math.exp(growth[-1] - removal)
    except OverflowError:
        raise ExponentialOverflowError(f"Continuous closed form overflows at t={t!r}")
    return SirState(x, y, z0 + (x0 - x) + (y0 - y))


def closed_form_constant_continuous(
    b: float, c: float, init: SirState, t0: float, t: float
) -> SirState:
    """Analytic solution on the real line with constant b and c.

    For b != c, x = x0 (1+k)^(b/(b-c)) (1 + k e^((b-c)(t-t0)))^(-b/(b-c)),
    for b = c, x = x0 exp(-b k (t-t0) / (1+k)); in both cases
    y = k x e^((b-c)(t-t0)) and z = N - x - y.

    Raises:
        InvalidInitialStateError: If x0 <= 0 or y0 <= 0
        CoefficientError: If b or c is negative or not finite
    """
    validate_initial_state(init)
    for label, value in (("b", b), ("c", c)):
        if not (math.isfinite(value) and value >= 0):
            raise CoefficientError(f"{label} must be finite and >= 0, got {value!r}")

    x0, y0, z0 = init.as_tuple()
    if t == t0:
        return init

    kappa = y0 / x0
    tau = t - t0
    rate = b - c

    if rate == 0:
        log_x = math.log(x0) - b * kappa * tau / (1.0 + kappa)
    elif rate * tau > _EXPM1_LIMIT:
        log_x = math.log(x0) + b / rate * (
            math.log1p(kappa) - float(np.logaddexp(0.0, math.log(kappa) + rate * tau))
        )
    else:
        log_x = math.log(x0) - b / rate * math.log1p(
            kappa * math.expm1(rate * tau) / (1.0 + kappa)
        )
    log_y = math.log(kappa) + log_x + rate * tau

    try:
        x, y = math.exp(log_x), math.exp(log_y)
    except OverflowError:
        raise ExponentialOverflowError(f"Constant closed form overflows at t={t!r}")
    return SirState(x, y, z0 + (x0 - x) + (y0 - y))


def closed_form_discrete(sc: SirScenario, t: float) -> SirState:
    """Product form of the solution on an integer range.

    x(t) = x0 / P_g(t), y(t) = y0 / (P_g(t) P_(c-b)(t)) where P_q(t) is the
    product of 1 + q(i) for i = t0 .. t-1, and
    g(i) = b(i) k / (P_(c-b)(i+1) + k (1 + (c-b)(i))).

    Raises:
        WrongDomainError: If sc.ts is not an integer range
        NotInDomainError: If t is not in sc.ts
        ValueError: If t < t0
        NonRegressiveError: If 1 + (c-b)(i) or 1 + g(i) vanishes, naming i
    """
    if not sc.ts.is_integer_range:
        raise WrongDomainError("closed_form_discrete needs an integer range")

    t = grid_point(sc.ts, t).t
    if t < sc.t0:
        raise ValueError(f"t={t!r} precedes t0={sc.t0!r}")

    kappa = sc.kappa
    product_e = 1.0
    product_g = 1.0
    for i in range(int(sc.t0), int(t)):
        factor_e = 1.0 + float(sc.c_minus_b(float(i)))
        if not abs(factor_e) > REGRESSIVITY_TOLERANCE:
            raise NonRegressiveError(f"1 + (c-b)({i}) vanishes", witness_t=float(i))
        product_e *= factor_e

        if _cancels(kappa * factor_e, product_e):
            raise NonRegressiveError(f"g({i}) is unbounded", witness_t=float(i))
        g = float(sc.b(float(i))) * kappa / (product_e + kappa * factor_e)
        factor_g = 1.0 + g
        if not abs(factor_g) > REGRESSIVITY_TOLERANCE:
            raise NonRegressiveError(f"1 + g({i}) vanishes", witness_t=float(i))
        product_g *= factor_g

        if not (math.isfinite(product_e) and math.isfinite(product_g)):
            raise ExponentialOverflowError(f"Product form overflows at i={i}")

    x0, y0, z0 = sc.init.as_tuple()
    if t == sc.t0:
        return sc.init
    x = x0 / product_g
    y = y0 / (product_g * product_e)
    return SirState(x, y, z0 + (x0 - x) + (y0 - y))

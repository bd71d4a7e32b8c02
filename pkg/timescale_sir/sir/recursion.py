from typing import List

from timescale_sir.calculus.coefficients import check_coefficient
from timescale_sir.calculus.exponential import REGRESSIVITY_TOLERANCE
from timescale_sir.calculus.timescale import GridPoint, PointKind, grid
from timescale_sir.errors import (
    ConservationError,
    DegenerateStateError,
    NonRegressiveError,
)
from timescale_sir.logger import timescale_sir_logger as logger
from timescale_sir.sir.closed_form import closed_form_states
from timescale_sir.sir.model import (
    SirScenario,
    SirState,
    SolutionMethod,
    SolutionSample,
    SolutionSeries,
)

# Below this x + y is degenerate and y is clamped to 0
DEGENERATE_FLOOR = 1e-300

# Conservation tolerances relative to N
SCATTERED_CONSERVATION_TOLERANCE = 1e-12
DENSE_CONSERVATION_TOLERANCE = 1e-9


def _rates(sc: SirScenario, t: float, x: float, y: float, z: float):
    b, c = float(sc.b(t)), float(sc.c(t))
    infection = b * x * y / (x + y)
    return -infection, infection - c * y, c * y


def _runge_kutta_step(sc: SirScenario, state: SirState, t: float, dt: float) -> SirState:
    x, y, z = state.as_tuple()

    k1 = _rates(sc, t, x, y, z)
    k2 = _rates(
        sc, t + dt / 2, x + dt / 2 * k1[0], y + dt / 2 * k1[1], z + dt / 2 * k1[2]
    )
    k3 = _rates(
        sc, t + dt / 2, x + dt / 2 * k2[0], y + dt / 2 * k2[1], z + dt / 2 * k2[2]
    )
    k4 = _rates(sc, t + dt, x + dt * k3[0], y + dt * k3[1], z + dt * k3[2])

    return SirState(
        x + dt / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]),
        y + dt / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]),
        z + dt / 6 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2]),
    )


def step_recursion(
    sc: SirScenario, state: SirState, gp: GridPoint, substep: float
) -> SirState:
    """Advances the SIR system from gp.t by one step.

    At a right-scattered point the implicit update is solved exactly:
        phi = b x / (x + y)
        y' = y / (1 + mu (c - phi))
        x' = x - mu phi y'
        z' = z + mu c y'
    At a right-dense point one classical Runge-Kutta step of length substep
    integrates the continuous system. At the maximum the state is returned.

    Args:
        sc: Scenario providing b and c
        state: State at gp.t
        gp: Grid point to step from
        substep: Step length on continuous parts

    Returns:
        The state at sigma(gp.t), or at gp.t + substep for right-dense points

    Raises:
        DegenerateStateError: If x + y falls below DEGENERATE_FLOOR
        NonRegressiveError: If 1 + mu (c - phi) vanishes
    """
    x, y, z = state.as_tuple()
    if x + y < DEGENERATE_FLOOR:
        raise DegenerateStateError(f"x + y = {x + y!r} at t={gp.t!r}")

    if y < DEGENERATE_FLOOR or gp.kind is PointKind.MAX:
        return SirState(x, 0.0, z) if y < DEGENERATE_FLOOR else state

    if gp.is_scattered:
        b, c = float(sc.b(gp.t)), float(sc.c(gp.t))
        phi = b * x / (x + y)
        factor = 1.0 + gp.mu_t * (c - phi)
        if not abs(factor) > REGRESSIVITY_TOLERANCE:
            raise NonRegressiveError("1 + mu (c - phi) vanishes", witness_t=gp.t)

        y_next = y / factor
        x_next = x - gp.mu_t * phi * y_next
        z_next = z + gp.mu_t * c * y_next
    else:
        if not substep > 0:
            raise ValueError(f"substep must be positive, got {substep!r}")
        x_next, y_next, z_next = _runge_kutta_step(sc, state, gp.t, substep).as_tuple()

    if y_next < DEGENERATE_FLOOR:
        y_next = 0.0
    return SirState(x_next, y_next, z_next)


def _recursion_states(sc: SirScenario, points: List[GridPoint]) -> List[SirState]:
    states = [sc.init]
    for current, following in zip(points, points[1:]):
        states.append(
            step_recursion(sc, states[-1], current, following.t - current.t)
        )
    return states


def _assert_conservation(sc: SirScenario, points: List[GridPoint], states):
    total = sc.total
    dense_seen = False
    for k, (point, state) in enumerate(zip(points, states)):
        if k > 0 and points[k - 1].is_dense:
            dense_seen = True
        relative = (
            DENSE_CONSERVATION_TOLERANCE
            if dense_seen
            else SCATTERED_CONSERVATION_TOLERANCE
        )
        error = abs(state.total - total)
        if error > relative * total:
            raise ConservationError(
                f"|x+y+z-N| = {error:.3e} exceeds {relative:g}*N at t={point.t!r}"
            )


def solve(
    sc: SirScenario, t_end: float, h: float, method: SolutionMethod
) -> SolutionSeries:
    """Solves the scenario over grid(sc.ts, sc.t0, t_end, h).

    Args:
        sc: Scenario
        t_end: Last sample time, in sc.ts and >= t0
        h: Grid step on continuous parts, also the integrator substep
        method: Closed form or step recursion

    Returns:
        A SolutionSeries with one sample per grid point

    Raises:
        NotInDomainError: If t_end is not in sc.ts
        ValueError: If t_end < t0
        CoefficientError: If b or c is negative or not finite on the grid
        ConservationError: If x + y + z drifts from N
    """
    points = grid(sc.ts, sc.t0, t_end, h)
    times = [p.t for p in points]
    check_coefficient(sc.b, times, "b")
    check_coefficient(sc.c, times, "c")

    if method is SolutionMethod.CLOSED_FORM:
        states = closed_form_states(sc, points)
    else:
        states = _recursion_states(sc, points)

    _assert_conservation(sc, points, states)

    logger.info(
        "Solved on [%s, %s] with %s: %d samples, final (x, y, z) = %s",
        sc.t0,
        t_end,
        method.value,
        len(points),
        states[-1].as_tuple(),
    )
    return SolutionSeries(
        samples=tuple(SolutionSample(p, s) for p, s in zip(points, states)),
        method=method,
        scenario=sc,
    )

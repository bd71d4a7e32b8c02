import dataclasses
import enum
import math
from typing import Optional, Tuple

import numpy as np
import pandas as pd

from timescale_sir.calculus.coefficients import CoefficientFunction
from timescale_sir.calculus.timescale import GridPoint, TimeScale, grid_point
from timescale_sir.errors import InvalidInitialStateError, NotInDomainError
from timescale_sir.transmuters.field_names import SERIES_COLUMNS


@dataclasses.dataclass(frozen=True)
class SirState:
    """Susceptible (x), infected (y) and removed (z) compartments."""

    x: float
    y: float
    z: float

    @property
    def total(self) -> float:
        return self.x + self.y + self.z

    def as_tuple(self) -> Tuple[float, float, float]:
        return self.x, self.y, self.z


def validate_initial_state(state: SirState) -> SirState:
    """Checks x0 > 0, y0 > 0 and z0 >= 0, all finite.

    Raises:
        InvalidInitialStateError: On the first violated condition
    """
    for label, value in zip("xyz", state.as_tuple()):
        if not math.isfinite(value):
            raise InvalidInitialStateError(f"{label}0 must be finite, got {value!r}")
    if state.x <= 0:
        raise InvalidInitialStateError(f"x0 must be > 0, got {state.x!r}")
    if state.y <= 0:
        raise InvalidInitialStateError(f"y0 must be > 0, got {state.y!r}")
    if state.z < 0:
        raise InvalidInitialStateError(f"z0 must be >= 0, got {state.z!r}")
    return state


@dataclasses.dataclass(frozen=True)
class SirScenario:
    """SIR initial value problem on a time scale.

    Attributes:
        ts: Time domain
        b: Transmission rate b(t)
        c: Removal rate c(t)
        init: State at t0
        t0: Initial time, a point of ts
    """

    ts: TimeScale
    b: CoefficientFunction
    c: CoefficientFunction
    init: SirState
    t0: float

    @property
    def kappa(self) -> float:
        """Initial infected to susceptible ratio y0 / x0."""
        return self.init.y / self.init.x

    @property
    def total(self) -> float:
        return self.init.total

    @property
    def has_constant_coefficients(self) -> bool:
        return self.b.is_constant and self.c.is_constant

    def c_minus_b(self, t):
        """(c - b)(t), vectorised like the coefficients."""
        return self.c(t) - self.b(t)


def make_scenario(
    ts: TimeScale,
    b: CoefficientFunction,
    c: CoefficientFunction,
    x0: float,
    y0: float,
    z0: float = 0.0,
    t0: Optional[float] = None,
) -> SirScenario:
    """Builds a validated SirScenario, t0 defaulting to the start of ts.

    Raises:
        InvalidInitialStateError: If the initial state is not admissible
        NotInDomainError: If t0 is not in ts
    """
    init = validate_initial_state(SirState(float(x0), float(y0), float(z0)))
    if t0 is None:
        t0 = ts.min
    try:
        t0 = grid_point(ts, t0).t
    except NotInDomainError:
        raise NotInDomainError(t0, f"Initial time {t0!r} is not in the time scale")
    return SirScenario(ts=ts, b=b, c=c, init=init, t0=t0)


class SolutionMethod(enum.Enum):
    CLOSED_FORM = "closed"
    RECURSION = "recursion"


@dataclasses.dataclass(frozen=True)
class SolutionSample:
    point: GridPoint
    state: SirState


@dataclasses.dataclass(frozen=True)
class SolutionSeries:
    """Samples of a solution over a grid of the scenario's time scale."""

    samples: Tuple[SolutionSample, ...]
    method: SolutionMethod
    scenario: SirScenario

    @property
    def times(self) -> np.ndarray:
        return np.array([s.point.t for s in self.samples])

    @property
    def x(self) -> np.ndarray:
        return np.array([s.state.x for s in self.samples])

    @property
    def y(self) -> np.ndarray:
        return np.array([s.state.y for s in self.samples])

    @property
    def z(self) -> np.ndarray:
        return np.array([s.state.z for s in self.samples])

    @property
    def final(self) -> SirState:
        return self.samples[-1].state

    def state_at(self, t: float, tolerance: float = 1e-9) -> SirState:
        """State of the sample at time t.

        Raises:
            KeyError: If no sample lies within tolerance of t
        """
        times = self.times
        idx = int(np.argmin(np.abs(times - t)))
        if abs(times[idx] - t) > tolerance:
            raise KeyError(f"No sample at t={t!r}")
        return self.samples[idx].state

    def to_frame(self) -> pd.DataFrame:
        """One row per sample with the columns of SERIES_COLUMNS."""
        rows = [
            (
                s.point.t,
                s.point.sigma_t,
                s.point.mu_t,
                s.state.x,
                s.state.y,
                s.state.z,
                self.method.value,
            )
            for s in self.samples
        ]
        return pd.DataFrame(rows, columns=list(SERIES_COLUMNS))

    def max_conservation_error(self) -> float:
        """max |x + y + z - N| over the samples."""
        totals = self.x + self.y + self.z
        return float(np.max(np.abs(totals - self.scenario.total)))

    def max_deviation(self, other: "SolutionSeries", relative: bool = True) -> float:
        """Largest componentwise deviation from another series on the same grid.

        Relative deviations divide by the larger magnitude of the two values,
        and count as 0 where both are 0.

        Raises:
            ValueError: If the series are not sampled at the same times
        """
        if len(self.samples) != len(other.samples) or not np.allclose(
            self.times, other.times, rtol=0.0, atol=1e-12
        ):
            raise ValueError("Series must be sampled on the same grid")

        mine = np.column_stack((self.x, self.y, self.z))
        theirs = np.column_stack((other.x, other.y, other.z))
        difference = np.abs(mine - theirs)
        if not relative:
            return float(np.max(difference))

        scale = np.maximum(np.abs(mine), np.abs(theirs))
        ratio = np.divide(
            difference, scale, out=np.zeros_like(difference), where=scale > 0
        )
        return float(np.max(ratio))

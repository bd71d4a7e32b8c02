import dataclasses
import enum
import math
from typing import Dict, Iterable, Optional, Sequence, Tuple, Union

import numpy as np

from timescale_sir.errors import CoefficientError

# Table look-ups this close outside the tabulated range are clamped
TABLE_EDGE_TOLERANCE = 1e-12

# Source of tables built in code rather than read from a file
INLINE_TABLE_SOURCE = "<inline>"

_SQRT_2PI = math.sqrt(2.0 * math.pi)


class CoefficientKind(enum.Enum):
    CONSTANT = "const"
    RECIPROCAL = "recip"
    LOG_NORMAL_PDF = "lognormpdf"
    VON_BERTALANFFY = "vonbert"
    SINUSOID = "sin"
    TABLE = "table"


# Parameter names accepted by each kind, in literal order
KIND_PARAMETERS: Dict[CoefficientKind, Tuple[str, ...]] = {
    CoefficientKind.CONSTANT: ("v",),
    CoefficientKind.RECIPROCAL: ("a", "shift"),
    CoefficientKind.LOG_NORMAL_PDF: (),
    CoefficientKind.VON_BERTALANFFY: ("s", "r", "d"),
    CoefficientKind.SINUSOID: ("base", "amp", "m"),
    CoefficientKind.TABLE: (),
}


def format_number(value: float) -> str:
    """Shortest text that reads back to the same float, integers without a dot."""
    value = float(value)
    if value.is_integer() and abs(value) < 1e16:
        return str(int(value))
    return repr(value)


@dataclasses.dataclass(frozen=True)
class CoefficientFunction:
    """Named, parameterised scalar function of time used for b(t) and c(t).

    Instances are vectorised: calling one on a numpy array evaluates it
    elementwise, calling it on a float returns a float.

    Attributes:
        kind: Which family of functions this is
        params: (name, value) pairs in the order of KIND_PARAMETERS
        table: (t, value) knots of a tabulated coefficient, increasing in t
        source: File the table was read from, as written in the literal
    """

    kind: CoefficientKind
    params: Tuple[Tuple[str, float], ...] = ()
    table: Tuple[Tuple[float, float], ...] = ()
    source: Optional[str] = None

    @property
    def parameters(self) -> Dict[str, float]:
        return dict(self.params)

    @property
    def is_constant(self) -> bool:
        return self.kind is CoefficientKind.CONSTANT

    @property
    def constant_value(self) -> Optional[float]:
        return self.parameters["v"] if self.is_constant else None

    @property
    def literal(self) -> str:
        """The coefficient literal this function reads back from."""
        if self.kind is CoefficientKind.CONSTANT:
            return f"const:{format_number(self.parameters['v'])}"
        if self.kind is CoefficientKind.LOG_NORMAL_PDF:
            return "lognormpdf"
        if self.kind is CoefficientKind.TABLE:
            return f"table:{self.source}"

        arguments = ",".join(
            f"{name}={format_number(value)}" for name, value in self.params
        )
        return f"{self.kind.value}:{arguments}"

    @property
    def name(self) -> str:
        """Human readable formula."""
        p = self.parameters
        if self.kind is CoefficientKind.CONSTANT:
            return format_number(p["v"])
        if self.kind is CoefficientKind.RECIPROCAL:
            return f"{format_number(p['a'])}/(t+{format_number(p['shift'])})"
        if self.kind is CoefficientKind.LOG_NORMAL_PDF:
            return "exp(-ln(t)^2/2)/(t*sqrt(2*pi))"
        if self.kind is CoefficientKind.VON_BERTALANFFY:
            return (
                f"{format_number(p['s'])}*(1-exp(-{format_number(p['r'])}*t"
                f"-{format_number(p['d'])}))"
            )
        if self.kind is CoefficientKind.SINUSOID:
            return (
                f"{format_number(p['base'])}+{format_number(p['amp'])}"
                f"*sin({format_number(p['m'])}*t)"
            )
        return f"interpolated table {self.source}"

    def __str__(self) -> str:
        return self.literal

    def __call__(self, t: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        times = np.asarray(t, dtype=float)
        values = self._evaluate(times)
        if values.ndim == 0:
            return float(values)
        return values

    def _evaluate(self, t: np.ndarray) -> np.ndarray:
        p = self.parameters

        if self.kind is CoefficientKind.CONSTANT:
            return np.full(t.shape, p["v"])

        if self.kind is CoefficientKind.RECIPROCAL:
            with np.errstate(divide="ignore", invalid="ignore"):
                return p["a"] / (t + p["shift"])

        if self.kind is CoefficientKind.LOG_NORMAL_PDF:
            positive = np.where(t > 0, t, 1.0)
            with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
                density = np.exp(-0.5 * np.log(positive) ** 2) / (positive * _SQRT_2PI)
            return np.where(t > 0, density, 0.0)

        if self.kind is CoefficientKind.VON_BERTALANFFY:
            return p["s"] * (1.0 - np.exp(-p["r"] * t - p["d"]))

        if self.kind is CoefficientKind.SINUSOID:
            return p["base"] + p["amp"] * np.sin(p["m"] * t)

        knots = np.array([k for k, _ in self.table])
        values = np.array([v for _, v in self.table])
        outside = (t < knots[0] - TABLE_EDGE_TOLERANCE) | (
            t > knots[-1] + TABLE_EDGE_TOLERANCE
        )
        if np.any(outside):
            first_bad = float(np.atleast_1d(t)[np.atleast_1d(outside)][0])
            raise CoefficientError(
                f"Table {self.source} covers [{knots[0]}, {knots[-1]}], "
                f"cannot extrapolate to t={first_bad!r}"
            )
        return np.interp(t, knots, values)


def _checked_params(
    kind: CoefficientKind, values: Dict[str, float]
) -> Tuple[Tuple[str, float], ...]:
    params = []
    for name in KIND_PARAMETERS[kind]:
        if name not in values:
            raise CoefficientError(f"{kind.value} needs parameter '{name}'")
        try:
            value = float(values[name])
        except (TypeError, ValueError):
            raise CoefficientError(
                f"{kind.value} parameter '{name}' is not a number: {values[name]!r}"
            )
        if not math.isfinite(value):
            raise CoefficientError(f"{kind.value} parameter '{name}' must be finite")
        params.append((name, value))

    unknown = set(values) - set(KIND_PARAMETERS[kind])
    if unknown:
        raise CoefficientError(
            f"{kind.value} does not take parameter(s) {', '.join(sorted(unknown))}"
        )
    return tuple(params)


def make_coefficient(kind: CoefficientKind, **values: float) -> CoefficientFunction:
    """Builds a non-tabulated coefficient from named parameters.

    Raises:
        CoefficientError: If a parameter is missing, unknown or not finite
    """
    if kind is CoefficientKind.TABLE:
        raise CoefficientError("Use tabulated() to build table coefficients")
    return CoefficientFunction(kind=kind, params=_checked_params(kind, values))


def constant(v: float) -> CoefficientFunction:
    return make_coefficient(CoefficientKind.CONSTANT, v=v)


def reciprocal(a: float = 1.0, shift: float = 1.0) -> CoefficientFunction:
    """a / (t + shift)"""
    return make_coefficient(CoefficientKind.RECIPROCAL, a=a, shift=shift)


def log_normal_pdf() -> CoefficientFunction:
    """Standard log-normal density, extended by 0 for t <= 0."""
    return make_coefficient(CoefficientKind.LOG_NORMAL_PDF)


def von_bertalanffy(s: float, r: float, d: float) -> CoefficientFunction:
    """s * (1 - exp(-r t - d))"""
    return make_coefficient(CoefficientKind.VON_BERTALANFFY, s=s, r=r, d=d)


def sinusoid(base: float, amp: float, m: float) -> CoefficientFunction:
    """base + amp * sin(m t)"""
    return make_coefficient(CoefficientKind.SINUSOID, base=base, amp=amp, m=m)


def tabulated(
    points: Iterable[Tuple[float, float]], source: Optional[str] = None
) -> CoefficientFunction:
    """Linear interpolation between (t, value) knots.

    Raises:
        CoefficientError: If fewer than two knots are given, a value is not
            finite or the knot times are not strictly increasing
    """
    knots = tuple((float(t), float(v)) for t, v in points)
    if len(knots) < 2:
        raise CoefficientError("A table coefficient needs at least two rows")
    if not all(math.isfinite(t) and math.isfinite(v) for t, v in knots):
        raise CoefficientError("Table coefficient rows must be finite")
    if any(b[0] <= a[0] for a, b in zip(knots, knots[1:])):
        raise CoefficientError("Table coefficient times must be strictly increasing")
    return CoefficientFunction(
        kind=CoefficientKind.TABLE, table=knots, source=source or INLINE_TABLE_SOURCE
    )


def check_coefficient(f, times: Sequence[float], label: str) -> np.ndarray:
    """Evaluates f on the given times and checks it is finite and nonnegative.

    Args:
        f: Coefficient to check
        times: Working grid times
        label: Name used in error messages, usually "b" or "c"

    Returns:
        The values of f at times

    Raises:
        CoefficientError: If f is negative or not finite at one of the times
    """
    times = np.asarray(times, dtype=float)
    values = np.array(np.broadcast_to(np.asarray(f(times), dtype=float), times.shape))

    bad = ~np.isfinite(values)
    if np.any(bad):
        raise CoefficientError(
            f"{label}(t) is not finite at t={float(times[bad][0])!r}"
        )

    negative = values < 0
    if np.any(negative):
        idx = int(np.argmax(negative))
        raise CoefficientError(
            f"{label}(t) = {values[idx]!r} is negative at t={float(times[idx])!r}"
        )
    return values

import bisect
import dataclasses
import enum
import functools
import math
from typing import Callable, List, Sequence, Tuple, Union

import numpy as np
from scipy.integrate import simpson

from timescale_sir.errors import (
    AccumulationPointError,
    EmptyDomainError,
    InvalidEndpointError,
    NotInDomainError,
)
from timescale_sir.logger import timescale_sir_logger as logger

# A query time this close to the domain is snapped onto it
MEMBERSHIP_TOLERANCE = 1e-12

# Smallest admissible gap between distinct scattered points / interval endpoints
MIN_SCATTERED_GAP = 1e-9

ScalarFunction = Callable[[Union[float, np.ndarray]], Union[float, np.ndarray]]


@dataclasses.dataclass(frozen=True)
class Interval:
    """Closed real interval [lo, hi] of a time scale."""

    lo: float
    hi: float


@dataclasses.dataclass(frozen=True)
class Point:
    """Isolated point of a time scale."""

    t: float

    @property
    def lo(self) -> float:
        return self.t

    @property
    def hi(self) -> float:
        return self.t


Segment = Union[Interval, Point]


class PointKind(enum.Enum):
    """Classification of a time scale point by its forward jump."""

    RIGHT_DENSE = "RightDense"
    RIGHT_SCATTERED = "RightScattered"
    MAX = "Max"


@dataclasses.dataclass(frozen=True)
class GridPoint:
    """A sampled time together with its forward jump and graininess.

    Attributes:
        t: Sample time
        sigma_t: Forward jump sigma(t)
        mu_t: Graininess sigma(t) - t
        kind: RightDense, RightScattered or Max
    """

    t: float
    sigma_t: float
    mu_t: float
    kind: PointKind

    @property
    def is_scattered(self) -> bool:
        return self.kind is PointKind.RIGHT_SCATTERED

    @property
    def is_dense(self) -> bool:
        return self.kind is PointKind.RIGHT_DENSE


@dataclasses.dataclass(frozen=True)
class TimeScale:
    """Canonical hybrid time domain.

    Built through canonicalize(): segments are sorted, pairwise disjoint and
    separated by at least MIN_SCATTERED_GAP.
    """

    segments: Tuple[Segment, ...]

    @functools.cached_property
    def _lows(self) -> List[float]:
        return [segment.lo for segment in self.segments]

    @property
    def min(self) -> float:
        return self.segments[0].lo

    @property
    def max(self) -> float:
        return self.segments[-1].hi

    @property
    def intervals(self) -> List[Interval]:
        return [s for s in self.segments if isinstance(s, Interval)]

    @property
    def points(self) -> List[Point]:
        return [s for s in self.segments if isinstance(s, Point)]

    @property
    def is_discrete(self) -> bool:
        """True when the scale has no continuous part."""
        return not self.intervals

    @property
    def is_single_interval(self) -> bool:
        return len(self.segments) == 1 and isinstance(self.segments[0], Interval)

    @property
    def is_integer_range(self) -> bool:
        """True for {n, n+1, ..., m} with integer n <= m."""
        if not self.is_discrete:
            return False
        values = [p.t for p in self.points]
        if not all(float(v).is_integer() for v in values):
            return False
        return all(b - a == 1 for a, b in zip(values, values[1:]))

    def __contains__(self, t) -> bool:
        try:
            _locate(self, t)
        except NotInDomainError:
            return False
        return True


def _check_endpoint(value: float) -> float:
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise InvalidEndpointError(f"Endpoint {value!r} is not a number")
    if not math.isfinite(value):
        raise InvalidEndpointError(
            f"Endpoint {value!r} is not finite; use a finite working horizon"
        )
    return value


def _check_step(h: float) -> float:
    if not (isinstance(h, (int, float)) and math.isfinite(h) and h > 0):
        raise ValueError(f"Step h must be a positive finite number, got {h!r}")
    return float(h)


def canonicalize(raw_segments: Sequence[Segment]) -> TimeScale:
    """Builds the canonical TimeScale of a list of intervals and points.

    Degenerate intervals become points, touching or overlapping segments are
    merged and points lying on an interval are absorbed by it.

    Args:
        raw_segments: Intervals and points, in any order

    Returns:
        The canonical TimeScale describing the same point set

    Raises:
        EmptyDomainError: If no segment is given
        InvalidEndpointError: If an endpoint is NaN/infinite or lo > hi
        AccumulationPointError: If two distinct segments are closer than MIN_SCATTERED_GAP
    """
    if not raw_segments:
        raise EmptyDomainError("A time scale needs at least one segment")

    normalized: List[Segment] = []
    for segment in raw_segments:
        if isinstance(segment, Interval):
            lo, hi = _check_endpoint(segment.lo), _check_endpoint(segment.hi)
            if lo > hi:
                raise InvalidEndpointError(f"Interval [{lo}, {hi}] has lo > hi")
            if hi - lo <= MEMBERSHIP_TOLERANCE:
                normalized.append(Point(lo))
            else:
                normalized.append(Interval(lo, hi))
        elif isinstance(segment, Point):
            normalized.append(Point(_check_endpoint(segment.t)))
        else:
            raise TypeError(f"Unknown segment type: {type(segment).__name__}")

    normalized.sort(key=lambda s: (s.lo, s.hi))

    merged: List[Segment] = [normalized[0]]
    for segment in normalized[1:]:
        previous = merged[-1]
        gap = segment.lo - previous.hi

        if gap <= MEMBERSHIP_TOLERANCE:
            hi = max(previous.hi, segment.hi)
            if hi - previous.lo <= MEMBERSHIP_TOLERANCE:
                merged[-1] = Point(previous.lo)
            else:
                merged[-1] = Interval(previous.lo, hi)
            continue

        if gap < MIN_SCATTERED_GAP:
            raise AccumulationPointError(
                f"Segments at {previous.hi!r} and {segment.lo!r} are closer than "
                f"{MIN_SCATTERED_GAP}"
            )
        merged.append(segment)

    return TimeScale(tuple(merged))


def real_interval(lo: float, hi: float) -> TimeScale:
    """Returns the time scale [lo, hi]."""
    return canonicalize([Interval(lo, hi)])


def integer_range(lo: int, hi: int) -> TimeScale:
    """Returns the time scale {lo, lo+1, ..., hi}."""
    return canonicalize([Point(float(k)) for k in range(int(lo), int(hi) + 1)])


def _locate(ts: TimeScale, t: float) -> Tuple[int, float]:
    """Returns the index of the segment holding t and t snapped onto it."""
    try:
        t = float(t)
    except (TypeError, ValueError):
        raise NotInDomainError(t)
    if not math.isfinite(t):
        raise NotInDomainError(t)

    idx = bisect.bisect_right(ts._lows, t + MEMBERSHIP_TOLERANCE) - 1
    if idx < 0:
        raise NotInDomainError(t)

    segment = ts.segments[idx]
    if t > segment.hi + MEMBERSHIP_TOLERANCE:
        raise NotInDomainError(t)

    return idx, min(max(t, segment.lo), segment.hi)


def _grid_point(ts: TimeScale, idx: int, t: float) -> GridPoint:
    segment = ts.segments[idx]

    if isinstance(segment, Interval) and t < segment.hi:
        return GridPoint(t=t, sigma_t=t, mu_t=0.0, kind=PointKind.RIGHT_DENSE)

    if idx == len(ts.segments) - 1:
        return GridPoint(t=t, sigma_t=t, mu_t=0.0, kind=PointKind.MAX)

    following = ts.segments[idx + 1].lo
    return GridPoint(
        t=t, sigma_t=following, mu_t=following - t, kind=PointKind.RIGHT_SCATTERED
    )


def grid_point(ts: TimeScale, t: float) -> GridPoint:
    """Classifies a single time of the scale.

    Raises:
        NotInDomainError: If t is not in ts
    """
    idx, t = _locate(ts, t)
    return _grid_point(ts, idx, t)


def sigma(ts: TimeScale, t: float) -> float:
    """Forward jump operator: inf{s in T : s > t}, and t itself at max T.

    Raises:
        NotInDomainError: If t is not in ts
    """
    return grid_point(ts, t).sigma_t


def mu(ts: TimeScale, t: float) -> float:
    """Graininess sigma(t) - t.

    Raises:
        NotInDomainError: If t is not in ts
    """
    return grid_point(ts, t).mu_t


def _subdivisions(lo: float, hi: float, h: float) -> int:
    return max(1, math.ceil((hi - lo) / h - 1e-9))


def interval_nodes(lo: float, hi: float, h: float) -> np.ndarray:
    """Uniform nodes of [lo, hi] with spacing at most h, both endpoints included."""
    n = _subdivisions(lo, hi, h)
    nodes = lo + (hi - lo) * np.arange(n + 1) / n
    nodes[-1] = hi
    return nodes


def grid(ts: TimeScale, t0: float, t1: float, h: float) -> List[GridPoint]:
    """Returns the ordered sample grid of ts between t0 and t1.

    Every scattered point in range is included, and each continuous part is
    sampled uniformly at spacing <= h with its endpoints.

    Args:
        ts: Time scale
        t0: First sample, must belong to ts
        t1: Last sample, must belong to ts and be >= t0
        h: Maximal spacing on continuous parts

    Returns:
        Strictly increasing list of GridPoint starting at t0 and ending at t1

    Raises:
        NotInDomainError: If t0 or t1 is not in ts
        ValueError: If t0 > t1 or h is not positive
    """
    h = _check_step(h)
    first, t0 = _locate(ts, t0)
    last, t1 = _locate(ts, t1)
    if t0 > t1:
        raise ValueError(f"grid requires t0 <= t1, got t0={t0!r}, t1={t1!r}")

    points: List[GridPoint] = []
    for idx in range(first, last + 1):
        segment = ts.segments[idx]
        lo, hi = max(segment.lo, t0), min(segment.hi, t1)

        if isinstance(segment, Point) or hi <= lo:
            points.append(_grid_point(ts, idx, lo))
            continue

        for node in interval_nodes(lo, hi, h):
            points.append(_grid_point(ts, idx, float(node)))

    logger.debug("Grid on [%s, %s] with h=%s has %d points", t0, t1, h, len(points))
    return points


def scattered_points(ts: TimeScale, a: float, b: float) -> List[Tuple[float, float]]:
    """Returns (t, mu(t)) for every right-scattered t with a <= t < b."""
    first, a = _locate(ts, a)
    last, b = _locate(ts, b)

    result = []
    for idx in range(first, min(last + 1, len(ts.segments) - 1)):
        t = ts.segments[idx].hi
        if a <= t < b:
            result.append((t, ts.segments[idx + 1].lo - t))
    return result


def dense_pieces(ts: TimeScale, a: float, b: float) -> List[Tuple[float, float]]:
    """Returns the nondegenerate continuous parts of [a, b] as (lo, hi) pairs."""
    first, a = _locate(ts, a)
    last, b = _locate(ts, b)

    pieces = []
    for segment in ts.segments[first : last + 1]:
        if isinstance(segment, Interval):
            lo, hi = max(segment.lo, a), min(segment.hi, b)
            if hi > lo:
                pieces.append((lo, hi))
    return pieces


def dense_part(f: ScalarFunction) -> ScalarFunction:
    """The form of f used on continuous parts (mu = 0).

    Functions built with the local graininess expose it as a `dense` attribute.
    """
    return getattr(f, "dense", f)


def evaluate_on(f: ScalarFunction, nodes: np.ndarray) -> np.ndarray:
    """Evaluates a vectorised f on an array, broadcasting constant results."""
    values = np.asarray(f(nodes), dtype=float)
    return np.array(np.broadcast_to(values, np.shape(nodes)), dtype=float)


def simpson_integral(f: ScalarFunction, lo: float, hi: float, h: float) -> float:
    """Composite Simpson quadrature of f over [lo, hi] at panel width <= h."""
    if hi <= lo:
        return 0.0
    n = _subdivisions(lo, hi, h)
    fine = lo + (hi - lo) * np.arange(2 * n + 1) / (2 * n)
    fine[-1] = hi
    return float(simpson(evaluate_on(f, fine), x=fine))


def simpson_cumulative(f: ScalarFunction, nodes: np.ndarray) -> np.ndarray:
    """Running Simpson integral of f from nodes[0] to every node.

    Each panel [nodes[k], nodes[k+1]] uses its own midpoint, so the result is
    a composite Simpson value at every node.
    """
    nodes = np.asarray(nodes, dtype=float)
    if nodes.size < 2:
        return np.zeros(nodes.size)

    left, right = nodes[:-1], nodes[1:]
    width = right - left
    panels = (
        width
        / 6.0
        * (
            evaluate_on(f, left)
            + 4.0 * evaluate_on(f, left + width / 2.0)
            + evaluate_on(f, right)
        )
    )
    return np.concatenate(([0.0], np.cumsum(panels)))


def delta_integral(
    ts: TimeScale, f: ScalarFunction, a: float, b: float, h: float
) -> float:
    """Delta integral of f over [a, b) on ts.

    Sums f(t) mu(t) over right-scattered t in [a, b) and adds the Simpson
    quadrature of f over the continuous parts of [a, b].

    Args:
        ts: Time scale
        f: Vectorised scalar function of time
        a: Lower limit, in ts
        b: Upper limit, in ts, a <= b
        h: Quadrature panel width on continuous parts

    Returns:
        The integral value

    Raises:
        NotInDomainError: If a or b is not in ts
        ValueError: If a > b or h is not positive
    """
    h = _check_step(h)
    _, a_snapped = _locate(ts, a)
    _, b_snapped = _locate(ts, b)
    if a_snapped > b_snapped:
        raise ValueError(f"delta_integral requires a <= b, got a={a!r}, b={b!r}")

    dense_f = dense_part(f)
    total = sum(
        simpson_integral(dense_f, lo, hi, h) for lo, hi in dense_pieces(ts, a, b)
    )
    total += sum(float(f(t)) * m for t, m in scattered_points(ts, a, b))
    return float(total)


def cumulative_delta_integral(
    ts: TimeScale, f: ScalarFunction, a: float, b: float, h: float
) -> Tuple[np.ndarray, np.ndarray]:
    """Running delta integral of f from a to every grid point of [a, b].

    Returns:
        (times, values) arrays aligned with grid(ts, a, b, h)
    """
    points = grid(ts, a, b, h)
    times = np.array([p.t for p in points])
    increments = np.zeros(max(len(points) - 1, 0))

    dense_steps = np.array([k for k, p in enumerate(points[:-1]) if p.is_dense], dtype=int)
    if dense_steps.size:
        left, right = times[dense_steps], times[dense_steps + 1]
        width = right - left
        dense_f = dense_part(f)
        increments[dense_steps] = (
            width
            / 6.0
            * (
                evaluate_on(dense_f, left)
                + 4.0 * evaluate_on(dense_f, left + width / 2.0)
                + evaluate_on(dense_f, right)
            )
        )

    for k, p in enumerate(points[:-1]):
        if p.is_scattered:
            increments[k] = float(f(p.t)) * p.mu_t

    return times, np.concatenate(([0.0], np.cumsum(increments)))

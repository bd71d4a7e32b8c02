"""Text literals for time scales and coefficient functions.

Time scale literal: comma separated segments, each one of
    [lo, hi]    closed interval
    lo..hi      the integers lo, lo+1, ..., hi
    t           a single point
e.g. "[0,12], 13..24".

Coefficient literal: "kind" or "kind:arguments", e.g.
    const:0.4   recip:a=1,shift=1   lognormpdf   vonbert:s=0.55,r=0.5,d=0.3
    sin:base=0.5,amp=0.25,m=1       table:rates.csv
A bare number is read as const.
"""
import os
import re
from typing import List, Optional

import pandas as pd

from timescale_sir.calculus.coefficients import (
    KIND_PARAMETERS,
    CoefficientFunction,
    CoefficientKind,
    format_number,
    make_coefficient,
    tabulated,
)
from timescale_sir.calculus.timescale import (
    Interval,
    Point,
    Segment,
    TimeScale,
    canonicalize,
)
from timescale_sir.errors import (
    CoefficientError,
    ScenarioParseError,
    TimeScaleError,
)

_NUMBER = r"[-+]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][-+]?\d+)?"

_SEGMENT = re.compile(
    rf"\s*(?:\[\s*(?P<lo>{_NUMBER})\s*,\s*(?P<hi>{_NUMBER})\s*\]"
    rf"|(?P<first>{_NUMBER})\s*\.\.\s*(?P<last>{_NUMBER})"
    rf"|(?P<point>{_NUMBER}))\s*"
)

_ARGUMENT = re.compile(rf"\s*(?P<name>[A-Za-z_]\w*)\s*=\s*(?P<value>{_NUMBER})\s*$")


def _integer(text: str, line: int, column: int) -> int:
    value = float(text)
    if not value.is_integer():
        raise ScenarioParseError(
            f"integer range bound {text!r} is not an integer", line, column
        )
    return int(value)


def parse_timescale(text: str, line: int = 0, column: int = 1) -> TimeScale:
    """Parses a time scale literal.

    Args:
        text: The literal
        line: Line reported in errors
        column: Column of text[0] in that line, reported in errors

    Raises:
        ScenarioParseError: On a syntax error or an invalid set
    """
    segments: List[Segment] = []
    position = 0

    while True:
        match = _SEGMENT.match(text, position)
        if not match or match.end() == position:
            raise ScenarioParseError(
                f"expected '[lo,hi]', 'lo..hi' or a number in time scale {text!r}",
                line,
                column + position,
            )

        at = column + match.start()
        if match.group("lo") is not None:
            segments.append(Interval(float(match.group("lo")), float(match.group("hi"))))
        elif match.group("first") is not None:
            first = _integer(match.group("first"), line, at)
            last = _integer(match.group("last"), line, at)
            if first > last:
                raise ScenarioParseError(f"empty integer range {first}..{last}", line, at)
            segments.extend(Point(float(k)) for k in range(first, last + 1))
        else:
            segments.append(Point(float(match.group("point"))))

        position = match.end()
        if position == len(text):
            break
        if text[position] != ",":
            raise ScenarioParseError(
                f"expected ',' between segments, found {text[position]!r}",
                line,
                column + position,
            )
        position += 1

    try:
        return canonicalize(segments)
    except TimeScaleError as e:
        raise ScenarioParseError(f"invalid time scale: {str(e)}", line, column)


def format_timescale(ts: TimeScale) -> str:
    """Writes the literal of ts, runs of consecutive integers as lo..hi."""
    parts: List[str] = []
    run: List[int] = []

    def flush():
        if len(run) == 1:
            parts.append(str(run[0]))
        elif run:
            parts.append(f"{run[0]}..{run[-1]}")
        run.clear()

    for segment in ts.segments:
        if isinstance(segment, Point) and float(segment.t).is_integer():
            value = int(segment.t)
            if run and value != run[-1] + 1:
                flush()
            run.append(value)
            continue

        flush()
        if isinstance(segment, Interval):
            parts.append(f"[{format_number(segment.lo)},{format_number(segment.hi)}]")
        else:
            parts.append(format_number(segment.t))
    flush()

    return ", ".join(parts)


def _read_table(source: str, base_dir: Optional[str]) -> pd.DataFrame:
    path = source if os.path.isabs(source) else os.path.join(base_dir or ".", source)
    table = pd.read_csv(path)
    if not {"t", "value"} <= set(table.columns):
        raise CoefficientError(f"Table {source} needs columns 't' and 'value'")
    return table


def parse_coefficient(
    text: str, base_dir: Optional[str] = None, line: int = 0, column: int = 1
) -> CoefficientFunction:
    """Parses a coefficient literal.

    Args:
        text: The literal
        base_dir: Directory table files are resolved against
        line: Line reported in errors
        column: Column of text[0] in that line, reported in errors

    Raises:
        ScenarioParseError: On a syntax error or invalid parameters
        OSError: If a table file cannot be read
    """
    stripped = text.strip()
    if re.fullmatch(_NUMBER, stripped):
        return parse_coefficient(f"const:{stripped}", base_dir, line, column)

    kind_text, _, arguments = stripped.partition(":")
    try:
        kind = CoefficientKind(kind_text.strip())
    except ValueError:
        known = ", ".join(k.value for k in CoefficientKind)
        raise ScenarioParseError(
            f"unknown coefficient kind {kind_text.strip()!r} (known: {known})",
            line,
            column,
        )

    try:
        if kind is CoefficientKind.TABLE:
            source = arguments.strip()
            if not source:
                raise ScenarioParseError("table needs a file name", line, column)
            table = _read_table(source, base_dir)
            return tabulated(zip(table["t"], table["value"]), source=source)

        if kind is CoefficientKind.CONSTANT:
            if not re.fullmatch(_NUMBER, arguments.strip()):
                raise ScenarioParseError(
                    f"const needs a number, got {arguments.strip()!r}", line, column
                )
            return make_coefficient(kind, v=float(arguments))

        values = {}
        if arguments.strip():
            for argument in arguments.split(","):
                match = _ARGUMENT.match(argument)
                if not match:
                    raise ScenarioParseError(
                        f"expected name=number, got {argument.strip()!r}", line, column
                    )
                values[match.group("name")] = float(match.group("value"))

        if kind is CoefficientKind.RECIPROCAL:
            values = {"a": 1.0, "shift": 1.0, **values}
        missing = [n for n in KIND_PARAMETERS[kind] if n not in values]
        if missing:
            raise ScenarioParseError(
                f"{kind.value} needs {', '.join(missing)}", line, column
            )
        return make_coefficient(kind, **values)

    except CoefficientError as e:
        raise ScenarioParseError(str(e), line, column)


def format_coefficient(f: CoefficientFunction) -> str:
    return f.literal

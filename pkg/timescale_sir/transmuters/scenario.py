import dataclasses
import math
import os
from importlib import resources
from typing import Dict, List, Optional, Tuple

from timescale_sir.calculus.coefficients import (
    INLINE_TABLE_SOURCE,
    CoefficientFunction,
    CoefficientKind,
    format_number,
)
from timescale_sir.calculus.timescale import TimeScale, grid_point
from timescale_sir.errors import (
    NotInDomainError,
    ScenarioParseError,
    ScenarioValidationError,
)
from timescale_sir.site.settings import settings
from timescale_sir.sir.model import SirScenario, SolutionMethod, make_scenario
from timescale_sir.transmuters.field_names import (
    NUMERIC_SCENARIO_KEYS,
    REQUIRED_SCENARIO_KEYS,
    RUN_METHODS,
    SCENARIO_KEYS,
)
from timescale_sir.transmuters.literals import (
    format_coefficient,
    format_timescale,
    parse_coefficient,
    parse_timescale,
)

SCENARIO_SUFFIX = ".scn"


@dataclasses.dataclass(frozen=True)
class ScenarioFile:
    """A parsed and validated scenario file.

    Attributes:
        name: Used to name output files
        timescale: Time domain
        b: Transmission rate
        c: Removal rate
        x0: Initial susceptibles, > 0
        y0: Initial infected, > 0
        z0: Initial removed, >= 0
        t0: Initial time, in timescale
        t_end: Last time of the solution series
        h: Grid step on continuous parts
        horizon: Working horizon of the limit classification
        method: closed, recursion or both
        out_dir: Output directory, None for the configured default
    """

    name: str
    timescale: TimeScale
    b: CoefficientFunction
    c: CoefficientFunction
    x0: float
    y0: float
    z0: float
    t0: float
    t_end: float
    h: float
    horizon: float
    method: str = "closed"
    out_dir: Optional[str] = None

    @property
    def methods(self) -> List[SolutionMethod]:
        if self.method == "both":
            return [SolutionMethod.CLOSED_FORM, SolutionMethod.RECURSION]
        return [SolutionMethod(self.method)]


def _in_domain(ts: TimeScale, field: str, value: float) -> float:
    try:
        return grid_point(ts, value).t
    except NotInDomainError:
        raise ScenarioValidationError(field, f"{value!r} is not in the time scale")


def _check_text(field: str, value: str):
    """Text values must read back unchanged from a scenario line."""
    if not value or value != value.strip() or any(ch in value for ch in "#\r\n"):
        raise ScenarioValidationError(
            field,
            f"must be non-empty, unpadded and free of '#' and line breaks, got {value!r}",
        )


def validate_scenario_file(sf: ScenarioFile) -> ScenarioFile:
    """Checks the semantic constraints of a scenario.

    Raises:
        ScenarioValidationError: Naming the first offending field
    """
    _check_text("name", sf.name)
    if sf.out_dir is not None:
        _check_text("out", sf.out_dir)
    for field in ("x0", "y0", "z0", "h"):
        if not math.isfinite(getattr(sf, field)):
            raise ScenarioValidationError(field, "must be finite")
    if sf.x0 <= 0:
        raise ScenarioValidationError("x0", f"must be > 0, got {format_number(sf.x0)}")
    if sf.y0 <= 0:
        raise ScenarioValidationError("y0", f"must be > 0, got {format_number(sf.y0)}")
    if sf.z0 < 0:
        raise ScenarioValidationError("z0", f"must be >= 0, got {format_number(sf.z0)}")
    if sf.h <= 0:
        raise ScenarioValidationError("h", f"must be > 0, got {format_number(sf.h)}")
    if sf.method not in RUN_METHODS:
        raise ScenarioValidationError(
            "method", f"must be one of {', '.join(sorted(RUN_METHODS))}"
        )

    t0 = _in_domain(sf.timescale, "t0", sf.t0)
    t_end = _in_domain(sf.timescale, "t_end", sf.t_end)
    horizon = _in_domain(sf.timescale, "horizon", sf.horizon)
    if t_end < t0:
        raise ScenarioValidationError("t_end", "must not precede t0")
    if horizon < t0:
        raise ScenarioValidationError("horizon", "must not precede t0")

    return dataclasses.replace(sf, t0=t0, t_end=t_end, horizon=horizon)


def _split_lines(text: str) -> Dict[str, Tuple[str, int, int]]:
    """Maps each key to (value, line, column of the value)."""
    entries: Dict[str, Tuple[str, int, int]] = {}

    for line_number, raw in enumerate(text.splitlines(), start=1):
        content = raw.split("#", 1)[0]
        if not content.strip():
            continue

        if "=" not in content:
            column = len(content) - len(content.lstrip()) + 1
            raise ScenarioParseError("expected 'key = value'", line_number, column)

        key_part, value_part = content.split("=", 1)
        key = key_part.strip()
        key_column = len(key_part) - len(key_part.lstrip()) + 1
        if key not in SCENARIO_KEYS:
            raise ScenarioParseError(f"unknown key {key!r}", line_number, key_column)
        if key in entries:
            raise ScenarioParseError(f"duplicate key {key!r}", line_number, key_column)

        value_column = len(key_part) + 2 + len(value_part) - len(value_part.lstrip())
        entries[key] = (value_part.strip(), line_number, value_column)

    return entries


def _number(key: str, entry: Tuple[str, int, int]) -> float:
    value, line, column = entry
    try:
        return float(value)
    except ValueError:
        raise ScenarioParseError(f"{key} expects a number, got {value!r}", line, column)


def parse_scenario(text: str, base_dir: Optional[str] = None) -> ScenarioFile:
    """Parses a flat key = value scenario file.

    Args:
        text: Content of the scenario file
        base_dir: Directory table coefficients are read from

    Returns:
        A validated ScenarioFile; omitted z0, t0, t_end, h and horizon default
        to 0, the start of the time scale, its end, the configured step and
        its end

    Raises:
        ScenarioParseError: On a syntax error, with line and column
        ScenarioValidationError: On a semantic error, with the field name
    """
    entries = _split_lines(text)

    missing = sorted(REQUIRED_SCENARIO_KEYS - set(entries))
    if missing:
        raise ScenarioValidationError(missing[0], "is required")

    value, line, column = entries["timescale"]
    timescale = parse_timescale(value, line, column)
    coefficients = {}
    for key in ("b", "c"):
        value, line, column = entries[key]
        coefficients[key] = parse_coefficient(value, base_dir, line, column)

    numbers = {
        key: _number(key, entries[key]) for key in NUMERIC_SCENARIO_KEYS if key in entries
    }

    sf = ScenarioFile(
        name=entries["name"][0] if "name" in entries else "scenario",
        timescale=timescale,
        b=coefficients["b"],
        c=coefficients["c"],
        x0=numbers["x0"],
        y0=numbers["y0"],
        z0=numbers.get("z0", 0.0),
        t0=numbers.get("t0", timescale.min),
        t_end=numbers.get("t_end", timescale.max),
        h=numbers.get("h", settings.default_step),
        horizon=numbers.get("horizon", timescale.max),
        method=entries["method"][0] if "method" in entries else "closed",
        out_dir=entries["out"][0] if "out" in entries else None,
    )
    return validate_scenario_file(sf)


def format_scenario(sf: ScenarioFile) -> str:
    """Writes a scenario file that parse_scenario reads back to sf.

    Raises:
        ScenarioValidationError: If b or c is a table that was not read from a file
    """
    for key, f in (("b", sf.b), ("c", sf.c)):
        if f.kind is CoefficientKind.TABLE and f.source == INLINE_TABLE_SOURCE:
            raise ScenarioValidationError(key, "an inline table has no scenario literal")
    values = {
        "name": sf.name,
        "timescale": format_timescale(sf.timescale),
        "b": format_coefficient(sf.b),
        "c": format_coefficient(sf.c),
        "x0": format_number(sf.x0),
        "y0": format_number(sf.y0),
        "z0": format_number(sf.z0),
        "t0": format_number(sf.t0),
        "t_end": format_number(sf.t_end),
        "h": format_number(sf.h),
        "horizon": format_number(sf.horizon),
        "method": sf.method,
        "out": sf.out_dir,
    }
    return "".join(
        f"{key} = {values[key]}\n" for key in SCENARIO_KEYS if values[key] is not None
    )


def bundled_scenarios() -> List[str]:
    """Names of the scenarios shipped with the package."""
    folder = resources.files("timescale_sir.scenarios")
    return sorted(
        entry.name[: -len(SCENARIO_SUFFIX)]
        for entry in folder.iterdir()
        if entry.name.endswith(SCENARIO_SUFFIX)
    )


def load_scenario(source: str) -> ScenarioFile:
    """Loads a scenario from a file path or by bundled scenario name.

    Table coefficients are resolved relative to the scenario file.

    Raises:
        FileNotFoundError: If source is neither a file nor a bundled name
        ScenarioParseError, ScenarioValidationError: As parse_scenario
    """
    if os.path.isfile(source):
        with open(source, encoding="utf-8") as f:
            text = f.read()
        return parse_scenario(text, base_dir=os.path.dirname(os.path.abspath(source)))

    bundled = resources.files("timescale_sir.scenarios") / f"{source}{SCENARIO_SUFFIX}"
    if not bundled.is_file():
        raise FileNotFoundError(f"No scenario file or bundled scenario named {source!r}")

    with resources.as_file(bundled) as path:
        return parse_scenario(bundled.read_text(encoding="utf-8"), str(path.parent))


def to_scenario(sf: ScenarioFile) -> SirScenario:
    """The SirScenario described by a scenario file."""
    return make_scenario(sf.timescale, sf.b, sf.c, sf.x0, sf.y0, sf.z0, sf.t0)

import dataclasses
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from timescale_sir.calculus.coefficients import format_number
from timescale_sir.calculus.exponential import RegressivityReport, check_regressive
from timescale_sir.calculus.timescale import evaluate_on, grid
from timescale_sir.errors import CoefficientError, ScenarioValidationError
from timescale_sir.logger import timescale_sir_logger as logger
from timescale_sir.site.settings import settings
from timescale_sir.sir.long_term import (
    LimitClassification,
    MonotonicityReport,
    classify_limit,
    monotonicity_report,
)
from timescale_sir.sir.model import SolutionSeries
from timescale_sir.sir.recursion import solve
from timescale_sir.transmuters.field_names import SWEEP_COLUMNS, SWEEP_PARAMS
from timescale_sir.transmuters.literals import parse_coefficient
from timescale_sir.transmuters.scenario import (
    ScenarioFile,
    to_scenario,
    validate_scenario_file,
)

CSV_FLOAT_FORMAT = "%.17g"


@dataclasses.dataclass(frozen=True)
class RunOptions:
    """Command line overrides of a scenario file; None keeps the file's value."""

    method: Optional[str] = None
    out_dir: Optional[str] = None
    h: Optional[float] = None
    classify: bool = False
    horizon: Optional[float] = None


@dataclasses.dataclass(frozen=True)
class RunReport:
    """What a run produced.

    Attributes:
        scenario: The scenario as run, overrides applied
        series_paths: CSV file per solution method
        series: Solution series per method value
        classification: Limit classification, when requested
        monotonicity: Monotonicity diagnostics of the first series
        regressivity: Regressivity of c - b over the solved range
        conservation_error: Largest |x + y + z - N| over all series
        oracle_deviation: Largest relative closed form / recursion deviation,
            when both methods ran
    """

    scenario: ScenarioFile
    series_paths: Dict[str, str]
    series: Dict[str, SolutionSeries]
    classification: Optional[LimitClassification]
    monotonicity: MonotonicityReport
    regressivity: RegressivityReport
    conservation_error: float
    oracle_deviation: Optional[float] = None

    def summary(self) -> List[str]:
        """Human readable summary lines."""
        final = next(iter(self.series.values())).final
        lines = [
            f"scenario {self.scenario.name}",
            f"  regressive: {self.regressivity.regressive}"
            f" (positively: {self.regressivity.positively_regressive})",
            f"  final state at t={format_number(self.scenario.t_end)}:"
            f" x={final.x:.12g} y={final.y:.12g} z={final.z:.12g}",
            f"  max conservation error: {self.conservation_error:.3e}",
        ]
        if self.oracle_deviation is not None:
            lines.append(f"  max closed/recursion deviation: {self.oracle_deviation:.3e}")
        lines.append(
            f"  y decrease hypotheses verified: {self.monotonicity.decrease_verified}"
        )
        if self.classification is not None:
            lines.extend(classification_lines(self.classification))
        for method, path in self.series_paths.items():
            lines.append(f"  wrote {method} series to {path}")
        return lines


def classification_lines(classification: LimitClassification) -> List[str]:
    lines = [
        f"  limit: {classification.outcome.value}"
        f" [{classification.certificate.value}]"
    ]
    if classification.theorem is not None:
        lines.append(f"  hypotheses checked numerically: {classification.theorem.value}")
    if classification.alpha_estimate is not None:
        lines.append(f"  alpha estimate: {classification.alpha_estimate:.12g}")
    if classification.alpha_lower_bound is not None:
        lines.append(f"  alpha lower bound: {classification.alpha_lower_bound:.12g}")
    if classification.terminal_state is not None:
        state = classification.terminal_state
        lines.append(
            f"  state at horizon {format_number(classification.horizon)}:"
            f" x={state.x:.6g} y={state.y:.6g} z={state.z:.6g}"
        )
    return lines


def apply_options(sf: ScenarioFile, options: RunOptions) -> ScenarioFile:
    """Scenario with the given overrides, validated again.

    Raises:
        ScenarioValidationError: If an override breaks a scenario constraint
    """
    changes = {}
    if options.method is not None:
        changes["method"] = options.method
    if options.out_dir is not None:
        changes["out_dir"] = options.out_dir
    if options.h is not None:
        changes["h"] = float(options.h)
    if options.horizon is not None:
        changes["horizon"] = float(options.horizon)
    if not changes:
        return sf
    return validate_scenario_file(dataclasses.replace(sf, **changes))


def write_frame(frame: pd.DataFrame, path: str):
    """Writes a CSV through a temporary file renamed into place."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)

    handle, temporary = tempfile.mkstemp(dir=directory, suffix=".tmp")
    os.close(handle)
    try:
        frame.to_csv(
            temporary, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n"
        )
        os.replace(temporary, path)
    except BaseException:
        if os.path.exists(temporary):
            os.remove(temporary)
        raise


def run(sf: ScenarioFile, options: Optional[RunOptions] = None) -> RunReport:
    """Solves a scenario, writes its series and diagnoses it.

    Args:
        sf: Scenario
        options: Overrides of the scenario's method, output directory, step
            and horizon, and whether to classify the limit

    Returns:
        A RunReport; every CSV it names exists

    Raises:
        TimescaleSirError: If solving or classification fails, before any
            file is written
        OSError: If the output cannot be written
    """
    options = options or RunOptions()
    sf = apply_options(sf, options)
    sc = to_scenario(sf)

    regressivity = check_regressive(sc.c_minus_b, sc.ts, sc.t0, sf.t_end, sf.h)
    series = {
        method.value: solve(sc, sf.t_end, sf.h, method) for method in sf.methods
    }

    deviation = None
    if len(series) == 2:
        deviation = series["closed"].max_deviation(series["recursion"])

    classification = None
    if options.classify:
        classification = classify_limit(sc, sf.horizon, sf.h)

    first = next(iter(series.values()))
    monotonicity = monotonicity_report(sc, sf.t_end, sf.h, series=first)

    out_dir = sf.out_dir or settings.output_dir
    paths = {}
    for method, solution in series.items():
        path = os.path.join(out_dir, f"{sf.name}_{method}.csv")
        write_frame(solution.to_frame(), path)
        paths[method] = path
        logger.info("Wrote %d samples to %s", len(solution.samples), path)

    return RunReport(
        scenario=sf,
        series_paths=paths,
        series=series,
        classification=classification,
        monotonicity=monotonicity,
        regressivity=regressivity,
        conservation_error=max(s.max_conservation_error() for s in series.values()),
        oracle_deviation=deviation,
    )


def split_sweep_values(text: str) -> List[str]:
    """Splits a --values argument on ';' when present, else on ','."""
    separator = ";" if ";" in text else ","
    return [value.strip() for value in text.split(separator) if value.strip()]


def _sweep_variant(sf: ScenarioFile, param: str, value: str, index: int) -> ScenarioFile:
    name = f"{sf.name}_{param}_{index}"
    if param in ("b", "c"):
        coefficient = parse_coefficient(value)
        return dataclasses.replace(sf, name=name, **{param: coefficient})

    try:
        number = float(value)
    except ValueError:
        raise ScenarioValidationError(param, f"expects a number, got {value!r}")
    return validate_scenario_file(dataclasses.replace(sf, name=name, **{param: number}))


def _sweep_row(param: str, value: str, report: RunReport) -> dict:
    final = next(iter(report.series.values())).final
    classification = report.classification
    return {
        "param": param,
        "value": value,
        "t_end": report.scenario.t_end,
        "x": final.x,
        "y": final.y,
        "z": final.z,
        "outcome": classification.outcome.value if classification else None,
        "certificate": classification.certificate.value if classification else None,
        "alpha_estimate": classification.alpha_estimate if classification else None,
        "alpha_lower_bound": (
            classification.alpha_lower_bound if classification else None
        ),
        "conservation_error": report.conservation_error,
        "oracle_deviation": report.oracle_deviation,
    }


def sweep(
    sf: ScenarioFile,
    param: str,
    values: Sequence[str],
    options: Optional[RunOptions] = None,
) -> List[RunReport]:
    """Runs the scenario once per value of one parameter.

    Runs execute concurrently and write distinct files; the aggregate CSV of
    terminal states and limit estimates is written afterwards.

    Args:
        sf: Base scenario
        param: One of b, c, x0, y0, z0, h
        values: Values as text; coefficient literals for b and c
        options: Run options shared by every run; the limit is classified
            unless options say otherwise

    Returns:
        One RunReport per value, in the order of values

    Raises:
        ScenarioValidationError: If param is not sweepable or a value is invalid
    """
    if param not in SWEEP_PARAMS:
        raise ScenarioValidationError(
            "param", f"must be one of {', '.join(sorted(SWEEP_PARAMS))}"
        )
    if not values:
        return []

    options = options or RunOptions(classify=True)
    variants = [_sweep_variant(sf, param, v, i) for i, v in enumerate(values)]

    with ThreadPoolExecutor(max_workers=settings.max_workers) as executor:
        reports = list(executor.map(lambda variant: run(variant, options), variants))

    out_dir = options.out_dir or sf.out_dir or settings.output_dir
    path = os.path.join(out_dir, f"{sf.name}_sweep_{param}.csv")
    frame = pd.DataFrame(
        [_sweep_row(param, v, r) for v, r in zip(values, reports)],
        columns=list(SWEEP_COLUMNS),
    )
    write_frame(frame, path)
    logger.info("Wrote sweep of %s over %d values to %s", param, len(values), path)
    return reports


@dataclasses.dataclass(frozen=True)
class CheckReport:
    """Hypotheses of a scenario, without solving it.

    Attributes:
        regressivity: Regressivity of c - b over [t0, max(t_end, horizon)]
        b_nonnegative: b >= 0 and finite on the grid
        c_nonnegative: c >= 0 and finite on the grid
        coefficient_problem: First coefficient problem found, if any
        removal_dominates_at_t0: c(t0) >= b(t0)
        initial_growth_predicted: x0/(x0+y0) b(t0) >= c(t0)
    """

    regressivity: RegressivityReport
    b_nonnegative: bool
    c_nonnegative: bool
    coefficient_problem: Optional[str]
    removal_dominates_at_t0: bool
    initial_growth_predicted: bool

    @property
    def ok(self) -> bool:
        return self.regressivity.regressive and self.b_nonnegative and self.c_nonnegative

    def lines(self) -> List[str]:
        report = self.regressivity
        lines = [
            f"regressive = {str(report.regressive).lower()}",
            f"positively_regressive = {str(report.positively_regressive).lower()}",
            f"min_abs_1_plus_mu_p = {report.min_abs_1_plus_mu_p:.12g}",
            f"min_1_plus_mu_p = {report.min_1_plus_mu_p:.12g}",
            f"b_nonnegative = {str(self.b_nonnegative).lower()}",
            f"c_nonnegative = {str(self.c_nonnegative).lower()}",
            f"removal_dominates_at_t0 = {str(self.removal_dominates_at_t0).lower()}",
            f"initial_growth_predicted = {str(self.initial_growth_predicted).lower()}",
        ]
        if report.witness_t is not None:
            lines.append(f"witness_t = {format_number(report.witness_t)}")
        if self.coefficient_problem:
            lines.append(f"coefficient_problem = {self.coefficient_problem}")
        return lines


def _nonnegative(f, times: np.ndarray, label: str) -> Optional[str]:
    try:
        values = evaluate_on(f, times)
    except CoefficientError as e:
        return str(e)
    bad = ~(np.isfinite(values) & (values >= 0))
    if np.any(bad):
        idx = int(np.argmax(bad))
        return f"{label}(t) = {values[idx]!r} at t={float(times[idx])!r}"
    return None


def check(sf: ScenarioFile, h: Optional[float] = None) -> CheckReport:
    """Reports regressivity and coefficient hypotheses of a scenario."""
    sf = apply_options(sf, RunOptions(h=h))
    sc = to_scenario(sf)
    end = max(sf.t_end, sf.horizon)

    regressivity = check_regressive(sc.c_minus_b, sc.ts, sc.t0, end, sf.h)
    times = np.array([p.t for p in grid(sc.ts, sc.t0, end, sf.h)])
    b_problem = _nonnegative(sc.b, times, "b")
    c_problem = _nonnegative(sc.c, times, "c")

    b0, c0 = float(sc.b(sc.t0)), float(sc.c(sc.t0))
    share = sf.x0 / (sf.x0 + sf.y0)
    return CheckReport(
        regressivity=regressivity,
        b_nonnegative=b_problem is None,
        c_nonnegative=c_problem is None,
        coefficient_problem=b_problem or c_problem,
        removal_dominates_at_t0=c0 >= b0,
        initial_growth_predicted=share * b0 >= c0,
    )

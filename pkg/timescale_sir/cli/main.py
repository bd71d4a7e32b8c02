"""Command line front end.

    timescale-sir solve <scenario> [--method closed|recursion|both] [--out dir] [--h step]
    timescale-sir classify <scenario> [--horizon T] [--h step]
    timescale-sir sweep <scenario> --param name --values v1,v2,...
    timescale-sir check <scenario> [--h step]

<scenario> is a scenario file path or the name of a bundled scenario.
Exit codes: 0 success, 1 scenario parse or validation error, 2 numerical
error, 3 I/O error.
"""
import argparse
import logging
import sys
from typing import List, Optional

from timescale_sir.errors import (
    ScenarioParseError,
    ScenarioValidationError,
    TimescaleSirError,
)
from timescale_sir.cli.runner import (
    RunOptions,
    apply_options,
    check,
    classification_lines,
    run,
    split_sweep_values,
    sweep,
)
from timescale_sir.logger import timescale_sir_logger as logger
from timescale_sir.sir.long_term import classify_limit
from timescale_sir.transmuters.field_names import RUN_METHODS, SWEEP_PARAMS
from timescale_sir.transmuters.scenario import load_scenario, to_scenario

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NUMERIC = 2
EXIT_IO = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="timescale-sir",
        description="Solve SIR models on hybrid time scales",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="Debug logging")
    commands = parser.add_subparsers(dest="command", required=True)

    solve_parser = commands.add_parser("solve", help="Solve and write CSV series")
    solve_parser.add_argument("scenario", help="Scenario file or bundled name")
    solve_parser.add_argument("--method", choices=sorted(RUN_METHODS))
    solve_parser.add_argument("--out", help="Output directory")
    solve_parser.add_argument("--h", type=float, help="Step on continuous parts")
    solve_parser.add_argument(
        "--classify", action="store_true", help="Also classify the limit"
    )
    solve_parser.add_argument("--horizon", type=float, help="Classification horizon")

    classify_parser = commands.add_parser("classify", help="Classify the limit")
    classify_parser.add_argument("scenario")
    classify_parser.add_argument("--horizon", type=float)
    classify_parser.add_argument("--h", type=float)

    sweep_parser = commands.add_parser("sweep", help="Run once per parameter value")
    sweep_parser.add_argument("scenario")
    sweep_parser.add_argument("--param", required=True, choices=sorted(SWEEP_PARAMS))
    sweep_parser.add_argument(
        "--values",
        required=True,
        help="Comma separated values, or ';' separated when literals contain commas",
    )
    sweep_parser.add_argument("--out")
    sweep_parser.add_argument("--h", type=float)

    check_parser = commands.add_parser("check", help="Report hypotheses only")
    check_parser.add_argument("scenario")
    check_parser.add_argument("--h", type=float)

    return parser


def _solve(args) -> List[str]:
    options = RunOptions(
        method=args.method,
        out_dir=args.out,
        h=args.h,
        classify=args.classify,
        horizon=args.horizon,
    )
    return run(load_scenario(args.scenario), options).summary()


def _classify(args) -> List[str]:
    sf = apply_options(
        load_scenario(args.scenario), RunOptions(h=args.h, horizon=args.horizon)
    )
    classification = classify_limit(to_scenario(sf), sf.horizon, sf.h)
    return [f"scenario {sf.name}"] + classification_lines(classification)


def _sweep(args) -> List[str]:
    options = RunOptions(out_dir=args.out, h=args.h, classify=True)
    reports = sweep(
        load_scenario(args.scenario),
        args.param,
        split_sweep_values(args.values),
        options,
    )
    lines = []
    for report in reports:
        lines.extend(report.summary())
    return lines


def _check(args) -> List[str]:
    report = check(load_scenario(args.scenario), h=args.h)
    return report.lines()


COMMANDS = {"solve": _solve, "classify": _classify, "sweep": _sweep, "check": _check}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )

    try:
        lines = COMMANDS[args.command](args)
    except (ScenarioParseError, ScenarioValidationError) as e:
        logger.error("Invalid scenario: %s", e)
        return EXIT_INPUT
    except TimescaleSirError as e:
        logger.error("Numerical failure: %s", e)
        return EXIT_NUMERIC
    except OSError as e:
        logger.error("I/O failure: %s", e)
        return EXIT_IO

    for line in lines:
        print(line)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

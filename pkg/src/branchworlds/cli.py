"""Command-line interface.

    branchworlds run <file|builtin> [--trials N] [--seed N]
                     [--format csv|text] [--semantics standard|qif] [--out PATH]
    branchworlds list
    branchworlds validate <file>

Exit codes: 0 success, 1 schema or validation error, 2 runtime query error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional

from . import library, runner
from .core import validate as validate_state
from .scenario import (
    QIF_RENORMALIZE,
    STANDARD,
    Scenario,
    ScenarioError,
    ScenarioParseError,
    execute,
    parse_scenario,
)

EXIT_OK = 0
EXIT_SCHEMA = 1
EXIT_RUNTIME = 2


def _load(source: str) -> Scenario:
    if source in library.builtin_names():
        return parse_scenario(library.builtin_text(source))
    path = Path(source)
    if not path.exists():
        raise ScenarioParseError([(0, f"no file or built-in scenario named {source!r}")])
    return parse_scenario(path.read_text())


def _emit(text: str, out: Optional[str]) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def cmd_run(args: argparse.Namespace) -> int:
    try:
        scenario = _load(args.scenario)
    except ScenarioParseError as err:
        for line_no, message in err.violations:
            print(f"error: line {line_no}: {message}", file=sys.stderr)
        return EXIT_SCHEMA
    semantics = None
    if args.semantics is not None:
        semantics = QIF_RENORMALIZE if args.semantics == "qif" else STANDARD
    options = runner.RunOptions(trials=args.trials, seed=args.seed, semantics=semantics)
    try:
        rows = runner.run(scenario, options)
    except ScenarioError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_RUNTIME
    mode = semantics if semantics is not None else scenario.semantics
    if args.format == "csv":
        _emit(runner.to_csv(rows), args.out)
    else:
        _emit(runner.to_text(rows, mode), args.out)
    return EXIT_OK


def cmd_list(args: argparse.Namespace) -> int:
    for name in library.builtin_names():
        print(name)
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    try:
        scenario = _load(args.file)
    except ScenarioParseError as err:
        for line_no, message in err.violations:
            print(f"error: line {line_no}: {message}", file=sys.stderr)
        return EXIT_SCHEMA
    try:
        timeline = execute(scenario)
    except ScenarioError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_RUNTIME
    problems = []
    for point in timeline.points:
        problems.extend(validate_state(point.state))
    if problems:
        for problem in dict.fromkeys(problems):
            print(f"invalid: {problem}", file=sys.stderr)
        return EXIT_SCHEMA
    print(f"{scenario.name}: ok")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="branchworlds",
        description="Branching-worlds measure calculus with a single-world Monte Carlo cross-check.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario file or built-in by name")
    p_run.add_argument("scenario", help="path to a scenario file, or a built-in name")
    p_run.add_argument("--trials", type=int, default=0,
                       help="Monte Carlo trials for oracle queries (default 0: analytic only)")
    p_run.add_argument("--seed", type=int, default=0, help="oracle seed (default 0)")
    p_run.add_argument("--format", choices=("csv", "text"), default="text")
    p_run.add_argument("--semantics", choices=("standard", "qif"), default=None,
                       help="override the scenario's measure accounting")
    p_run.add_argument("--out", default=None, help="write the report here instead of stdout")
    p_run.set_defaults(func=cmd_run)

    p_list = sub.add_parser("list", help="list built-in scenarios")
    p_list.set_defaults(func=cmd_list)

    p_validate = sub.add_parser("validate", help="parse and audit a scenario file")
    p_validate.add_argument("file")
    p_validate.set_defaults(func=cmd_validate)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

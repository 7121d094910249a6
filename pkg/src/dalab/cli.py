"""Command-line entry point.

Exit codes: 0 all checks pass, 1 a tolerance or invariant violation,
2 invalid input, 3 scale guard.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from .cache import ENV_VAR
from .errors import DalabError, InsufficientDegreeRangeError, InvalidInputError, PreconditionError, ScaleGuardError
from .runner import run_scenario
from .scenario import parse_scenario

EXIT_OK, EXIT_VIOLATION, EXIT_INPUT, EXIT_SCALE = 0, 1, 2, 3

COMMANDS = {
    "dims": ("dims",),
    "hilbert": ("hilbert",),
    "angles": ("angles",),
    "essnorm": ("essnorm",),
    "closedness": ("closedness",),
    "similarity": ("similarity",),
    "report": None,  # tasks from the scenario file
}


def _p_list(text: str):
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("empty p list")
    return vals


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dalab", description="Graded Drury-Arveson diagnostics from scenario files")
    parser.add_argument("-v", "--verbose", action="store_true", help="log timing and cache statistics")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help=f"run the {name} task" if name != "report" else "run all scenario tasks")
        p.add_argument("--scenario", required=True, help="scenario JSON file")
        p.add_argument("--out", default=None, help="output directory (default: scenario outputs.dir or ./dalab-out)")
        p.add_argument("--cache", default=None, help=f"cache directory (default: ${ENV_VAR})")
        p.add_argument("--max-degree", type=int, default=None, help="override maxDegree")
        p.add_argument("--p", type=_p_list, default=None, help="override Schatten exponents, e.g. 1.5,2")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        scenario = parse_scenario(args.scenario)
        if args.max_degree is not None or args.p is not None:
            scenario = scenario.with_overrides(args.max_degree, args.p)
        tasks = COMMANDS[args.command]
        if tasks is not None:
            raw = dict(scenario.raw, tasks=list(tasks))
            scenario = type(scenario)(**{**scenario.__dict__, "tasks": tasks, "raw": raw})
        cache = args.cache if args.cache is not None else (scenario.cache_dir or os.environ.get(ENV_VAR))
        summary = run_scenario(scenario, out_dir=args.out, cache_dir=cache)
    except ScaleGuardError as exc:
        print(f"dalab: {exc}", file=sys.stderr)
        return EXIT_SCALE
    except (InvalidInputError, PreconditionError, InsufficientDegreeRangeError) as exc:
        print(f"dalab: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except DalabError as exc:
        print(f"dalab: {exc}", file=sys.stderr)
        return EXIT_VIOLATION
    for task, verdict in summary.verdicts.items():
        print(f"{task}: {verdict}")
    print(f"cache hits: {summary.cache_hits}", file=sys.stderr)
    return summary.exit_code


if __name__ == "__main__":
    sys.exit(main())

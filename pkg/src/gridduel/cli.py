"""Command-line front end: validate plans, run them, report on the results.

Exit codes: 0 success, 2 plan/input validation, 3 execution produced failed
runs, 4 storage or filesystem trouble.  Progress goes to stderr; data goes
to stdout or the requested files.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import __version__
from .errors import GridDuelError, PlanError, StoreError
from .experiment import (
    execute_plan,
    generate_runs,
    load_plan,
    write_reports,
)
from .grid.synthetic import generate_city_grid

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_RUN_FAILURES = 3
EXIT_IO = 4

STORE_ENV = "GRIDDUEL_STORE_ROOT"


def _say(message: str) -> None:
    print(message, file=sys.stderr)


def _store_root(value: str | None) -> Path:
    return Path(value or os.environ.get(STORE_ENV) or "runs")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gridduel",
        description="Adversarial load-scaling duels on a simulated power grid.",
    )
    parser.add_argument("--version", action="version", version=f"gridduel {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    validate = commands.add_parser("validate", help="check a plan file and exit")
    validate.add_argument("--plan", required=True, help="plan YAML file")

    generate = commands.add_parser(
        "generate", help="list the runs a plan expands to, without executing"
    )
    generate.add_argument("--plan", required=True, help="plan YAML file")

    run = commands.add_parser("run", help="execute every missing run of a plan")
    run.add_argument("--plan", required=True, help="plan YAML file")
    run.add_argument(
        "--store",
        help=f"results root (default: ${STORE_ENV} or ./runs)",
    )
    run.add_argument(
        "--parallelism", type=int, help="override the plan's max_parallel"
    )
    run.add_argument(
        "--transport",
        choices=("loopback", "socket"),
        help="override the plan's transport",
    )
    run.add_argument(
        "--endpoint",
        help="fixed host:port for the socket transport (serial runs only)",
    )

    report = commands.add_parser("report", help="write CSV summaries for a plan")
    report.add_argument("--plan", required=True, help="plan YAML file")
    report.add_argument("--store", help=f"results root (default: ${STORE_ENV} or ./runs)")
    report.add_argument("--out", required=True, help="directory for the CSV files")

    dump = commands.add_parser(
        "dump-grid", help="write a synthetic city grid as JSON for grid:{file:...} plans"
    )
    dump.add_argument("--seed", type=int, required=True, help="construction seed")
    dump.add_argument("--out", help="output file (default: stdout)")

    return parser


def _cmd_validate(args) -> int:
    plan = load_plan(args.plan)
    _say(f"plan {plan['name']!r} is valid")
    print(json.dumps({"name": plan["name"], "runs": len(generate_runs(plan))}))
    return EXIT_OK


def _cmd_generate(args) -> int:
    plan = load_plan(args.plan)
    for run in generate_runs(plan):
        print(json.dumps({"run_id": run.run_id, "point": run.point, "seed": run.seed}))
    return EXIT_OK


def _cmd_run(args) -> int:
    plan = load_plan(args.plan)
    summary = execute_plan(
        plan,
        _store_root(args.store),
        parallelism=args.parallelism,
        transport=args.transport,
        endpoint=args.endpoint,
        progress=_say,
    )
    print(json.dumps(summary))
    return EXIT_RUN_FAILURES if summary["failed"] else EXIT_OK


def _cmd_report(args) -> int:
    plan = load_plan(args.plan)
    paths = write_reports(_store_root(args.store), plan["name"], args.out)
    for name in sorted(paths):
        _say(f"wrote {paths[name]}")
    print(json.dumps({name: str(path) for name, path in sorted(paths.items())}))
    return EXIT_OK


def _cmd_dump_grid(args) -> int:
    model = generate_city_grid(args.seed)
    text = json.dumps(model.to_dict(), indent=2, sort_keys=True)
    if args.out:
        try:
            Path(args.out).write_text(text + "\n", encoding="utf-8")
        except OSError as exc:
            raise StoreError(f"cannot write {args.out}: {exc}") from exc
        _say(f"wrote {args.out}")
    else:
        print(text)
    return EXIT_OK


_COMMANDS = {
    "validate": _cmd_validate,
    "generate": _cmd_generate,
    "run": _cmd_run,
    "report": _cmd_report,
    "dump-grid": _cmd_dump_grid,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except PlanError as exc:
        _say(f"invalid: {exc}")
        return EXIT_INVALID
    except (StoreError, OSError) as exc:
        _say(f"storage: {exc}")
        return EXIT_IO
    except GridDuelError as exc:
        _say(f"error: {exc}")
        return EXIT_RUN_FAILURES


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point: ``condtest {identity,closeness,sweep,verify-lemmas}``."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .closeness import ClosenessConstants
from .harness import (
    read_multipliers,
    records_to_csv,
    records_to_json,
    run_trials,
    sweep,
    verify_lemmas,
)

SEED_ENV = "CONDTEST_SEED"


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _ints(text: str) -> list[int]:
    return [int(float(x)) for x in text.split(",") if x.strip()]


def _common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--delta", type=float, default=0.2)
    sub.add_argument("--trials", type=int, default=10)
    sub.add_argument("--seed", type=int, default=0, help=f"overridden by ${SEED_ENV}")
    sub.add_argument("--gen", default="uniform", help="generator spec, e.g. 'two-bump(0.5)'")
    sub.add_argument("--multipliers", type=Path, help="key = value file of closeness multipliers")
    sub.add_argument("--out", type=Path, help="output path (default: stdout)")
    sub.add_argument("--format", choices=("csv", "json"), default="csv")
    sub.add_argument("--amplify", action="store_true", help="record amplified verdicts")
    sub.add_argument("--workers", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="condtest", description=__doc__)
    subs = parser.add_subparsers(dest="command", required=True)
    for name in ("identity", "closeness"):
        sub = subs.add_parser(name, help=f"run {name} trials on one fixture")
        sub.add_argument("--k", type=int, default=1000)
        sub.add_argument("--eps", type=float, default=0.5)
        _common(sub)
    sw = subs.add_parser("sweep", help="run trials over a grid of k and eps")
    sw.add_argument("--tester", choices=("identity", "closeness"), default="identity")
    sw.add_argument("--k", type=_ints, default=[256, 4096], help="comma-separated")
    sw.add_argument("--eps", type=_floats, default=[0.5], help="comma-separated")
    _common(sw)
    vl = subs.add_parser("verify-lemmas", help="numerical lemma sweeps")
    vl.add_argument("--seed", type=int, default=0)
    vl.add_argument("--out", type=Path)
    vl.add_argument("--format", choices=("json",), default="json")
    return parser


def _seed(args) -> int:
    env = os.environ.get(SEED_ENV)
    return int(env) if env not in (None, "") else args.seed


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        out.write_text(text if text.endswith("\n") else text + "\n")


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    seed = _seed(args)
    if args.command == "verify-lemmas":
        report = verify_lemmas(seed)
        _emit(json.dumps(report, indent=2), args.out)
        return 0 if report["passed"] else 1

    try:
        constants = ClosenessConstants()
        if args.multipliers is not None:
            constants = ClosenessConstants.from_mapping(read_multipliers(args.multipliers.read_text()))
        opts = dict(constants=constants, amplified=args.amplify, workers=args.workers)
        if args.command == "sweep":
            records = sweep(args.gen, args.tester, args.k, args.eps, args.delta, args.trials, seed, **opts)
        else:
            records = run_trials(
                args.gen, args.command, args.k, args.eps, args.delta, args.trials, seed, **opts
            )
    except ValueError as err:
        print(f"condtest: {err}", file=sys.stderr)
        return 2
    text = records_to_csv(records) if args.format == "csv" else records_to_json(records)
    _emit(text, args.out)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

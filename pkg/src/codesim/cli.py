"""Command-line entry point: ``codesim generate|run|score|report``."""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

from .client import ReplayMiss
from .runner import ConfigError, ExperimentSpec, MissingLogs, generate, report, run, score

EXIT_OK, EXIT_CONFIG, EXIT_PARTIAL = 0, 2, 3


def _spec(args) -> ExperimentSpec:
    spec = ExperimentSpec.load(args.spec)
    if getattr(args, "seed", None) is not None:
        spec = replace(spec, seed=args.seed)
    return spec


def cmd_generate(args) -> int:
    rows = generate(_spec(args), args.out, write_sources=not args.no_sources)
    print(f"wrote {rows} instances to {args.out}/manifest.jsonl")
    return EXIT_OK


def cmd_run(args) -> int:
    result = run(_spec(args), args.out, mode=args.mode, parallel=args.parallel)
    print(f"{result.rows} calls, {result.failures} failed; report in {args.out}/report.json")
    return result.exit_code


def cmd_score(args) -> int:
    rep = score(args.out)
    print(f"re-scored {len(rep['cells'])} cells")
    return EXIT_PARTIAL if rep["failed_calls"] else EXIT_OK


def cmd_report(args) -> int:
    for path in report(args.out):
        print(path)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="codesim", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="emit the instance manifest and program sources")
    p.add_argument("--spec", required=True, help="YAML spec file or built-in spec name")
    p.add_argument("--seed", type=int, help="override the master seed")
    p.add_argument("--out", required=True)
    p.add_argument("--no-sources", action="store_true", help="manifest only")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("run", help="execute a spec against its models")
    p.add_argument("--spec", required=True)
    p.add_argument("--mode", choices=("live", "record", "replay"))
    p.add_argument("--parallel", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("score", help="re-score existing logs")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("report", help="write CSV tables from logs")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (ConfigError, ReplayMiss, MissingLogs) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

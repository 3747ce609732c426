"""Command-line entry point: ``cml <experiment> --config <path>``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import CmlError
from .experiments import EXPERIMENTS, ExperimentConfig, run, to_csv, to_json

EXIT_PASS, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cml", description="Run a measure-algebra experiment from a JSON config.")
    parser.add_argument("experiment", choices=EXPERIMENTS)
    parser.add_argument("--config", required=True, help="JSON config file")
    parser.add_argument("--out", help="write the report here instead of stdout")
    parser.add_argument("--format", choices=("json", "csv"), default="json")
    parser.add_argument("--window", type=int, help="override the config window W")
    parser.add_argument("--trunc", type=int, help="override the truncation K")
    parser.add_argument("--eps", type=float)
    parser.add_argument("--delta", type=float)
    parser.add_argument("--parallel", action="store_true", help="evaluate gap candidates in worker processes")
    parser.add_argument("--timing", action="store_true", help="record wall time (output is then not reproducible)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = ExperimentConfig.load(
            args.experiment,
            args.config,
            window=args.window,
            trunc=args.trunc,
            eps=args.eps,
            delta=args.delta,
            parallel=args.parallel,
        )
        report = run(cfg, timing=args.timing)
    except (CmlError, KeyError, TypeError, ValueError) as exc:
        detail = f"missing field {exc}" if isinstance(exc, KeyError) else str(exc)
        print(f"cml {args.experiment}: error: {detail}", file=sys.stderr)
        return EXIT_INPUT
    text = to_json(report) if args.format == "json" else to_csv(report)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_FAIL if report.verdict == "fail" else EXIT_PASS


if __name__ == "__main__":
    sys.exit(main())

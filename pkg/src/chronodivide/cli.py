"""Batch command-line interface.

Subcommands: run (full pipeline), extract, select, analyze, distance, synth.
Every subcommand takes --config; --seed overrides the configured master
seed, --threads the worker count. Exit code reflects operational success
only; scientific findings live in the reports.
"""

from __future__ import annotations

import argparse
import json
import sys

from .errors import ChronodivideError, PipelineError
from .pipeline import (
    load_run_config,
    load_synthetic_spec,
    run_analyze,
    run_distance,
    run_extract,
    run_pipeline,
    run_select,
)
from .synthetic import generate_synthetic


def _add_common(parser: argparse.ArgumentParser, with_format: bool = False) -> None:
    parser.add_argument("--config", required=True, help="TOML configuration file")
    parser.add_argument("--seed", type=int, default=None, help="override master_seed")
    parser.add_argument("--threads", type=int, default=None, help="worker pool size")
    if with_format:
        parser.add_argument(
            "--format",
            choices=("json", "csv"),
            default=None,
            help="json: reports without plots; csv: series/tables only",
        )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chronodivide",
        description="Detect chronological authorship divides in an ordered corpus.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    _add_common(sub.add_parser("run", help="full pipeline"), with_format=False)
    _add_common(sub.add_parser("extract", help="corpus to feature CSV"))
    _add_common(sub.add_parser("select", help="feature CSV to ranking and model"))
    _add_common(sub.add_parser("analyze", help="model + corpus to series/reports"),
                with_format=True)
    _add_common(sub.add_parser("distance", help="group distance summary"),
                with_format=True)
    _add_common(sub.add_parser("synth", help="generate a synthetic corpus"))
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "synth":
            spec, out_dir = load_synthetic_spec(args.config, seed_override=args.seed)
            path = generate_synthetic(spec, out_dir)
            print(json.dumps({"corpus": str(path)}, indent=2))
            return 0

        cfg = load_run_config(
            args.config, seed_override=args.seed, threads_override=args.threads
        )
        if args.command == "run":
            result = run_pipeline(cfg)
            print(
                json.dumps(
                    {
                        "output_dir": str(cfg.output_dir),
                        "d_star": result.d_star_result.d_star,
                        "divide_found": result.divide.divide_found,
                        "divide_after_ordinal": result.divide.divide_after_ordinal,
                        "agreement": result.divide.agreement,
                    },
                    indent=2,
                )
            )
        elif args.command == "extract":
            path = run_extract(cfg)
            print(json.dumps({"features": str(path)}, indent=2))
        elif args.command == "select":
            path = run_select(cfg)
            print(json.dumps({"model": str(path)}, indent=2))
        elif args.command == "analyze":
            emit = {"csv": "csv", "json": "json", None: "all"}[args.format]
            divide = run_analyze(cfg, emit=emit)
            print(
                json.dumps(
                    {
                        "divide_found": divide.divide_found,
                        "divide_after_ordinal": divide.divide_after_ordinal,
                        "agreement": divide.agreement,
                    },
                    indent=2,
                )
            )
        elif args.command == "distance":
            path = run_distance(cfg)
            print(json.dumps({"distances": str(path)}, indent=2))
        return 0
    except PipelineError as exc:
        print(f"error in {exc}", file=sys.stderr)
        return 1
    except ChronodivideError as exc:
        print(f"error in stage 'config': {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

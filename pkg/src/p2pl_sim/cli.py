#!/usr/bin/env python3
"""
P2PL simulator command line

  run        --config FILE | --preset NAME, then any number of --set key=value
  summarize  metric files -> comparison table (+ optional series CSV / HTML)
  verify     mixing-stochasticity and graph-statistics validators
  presets    list preset names
  serve      read-only results API

Exit code 0 on success, 1 on any error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from dotenv import load_dotenv

# Load .env from the src directory (parent of p2pl_sim)
load_dotenv(Path(__file__).resolve().parent.parent / ".env")

from app import LOG_DATEFMT, LOG_FORMAT, serve
from core.dataset import IdxFormatError, PartitionError
from core.topology import DisconnectedGraphError, GraphConstructionError, InvalidGraphSpec
from services.experiment_config import (
    ConfigValidationError,
    ExperimentConfig,
    apply_overrides,
    load_config_file,
    parse_set_args,
)
from services.experiment_runner import run_experiment
from services.metrics_repository import MetricsParseError
from services.presets import UnknownPresetError, available_presets, resolve_preset
from services.summary_service import summarize
from services.verification_service import run_verification

logger = logging.getLogger("p2pl")

HANDLED_ERRORS = (
    ConfigValidationError,
    UnknownPresetError,
    IdxFormatError,
    PartitionError,
    InvalidGraphSpec,
    GraphConstructionError,
    DisconnectedGraphError,
    MetricsParseError,
    FileNotFoundError,
    ValueError,
)


def _resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    overrides = parse_set_args(args.set or [])
    if args.preset and args.config:
        raise ConfigValidationError(["use either --preset or --config, not both"])
    if args.preset:
        config = resolve_preset(args.preset)
    elif args.config:
        config = load_config_file(Path(args.config))
    else:
        config = ExperimentConfig()
    if args.output:
        overrides["output"] = args.output
    if args.data_dir:
        overrides["data_dir"] = args.data_dir
    return apply_overrides(config, overrides) if overrides else config


def cmd_run(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    metrics_path, report = run_experiment(config)
    status = f"converged at round {report.rounds_to_threshold}" if report.converged else "did not converge"
    if report.approximate_convergence:
        status += f" (evaluated every {report.evaluation_stride} rounds)"
    print(f"{metrics_path}: {status} after {report.rounds_run} recorded round(s), {report.wall_time_s:.1f}s")
    return 0


def cmd_summarize(args: argparse.Namespace) -> int:
    table = summarize([Path(p) for p in args.files], args.threshold)
    text = table.to_html() if args.html else table.to_markdown()
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        print(text)
    if args.series:
        table.write_series(Path(args.series))
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    report = run_verification(args.devices, args.seeds, include_stats=not args.skip_stats)
    print(report.render())
    return 0 if report.passed else 1


def cmd_presets(args: argparse.Namespace) -> int:
    print("\n".join(available_presets()))
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    serve(args.host, args.port, Path(args.results_dir) if args.results_dir else None)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="p2pl", description="Peer-to-peer deep learning simulator")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment")
    run.add_argument("--config", help="flat key=value config file")
    run.add_argument("--preset", help="named preset (see `presets`)")
    run.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")
    run.add_argument("--output", help="run id for the metric and report files")
    run.add_argument("--data-dir", help="MNIST directory (overrides P2PL_DATA_DIR)")
    run.set_defaults(func=cmd_run)

    summ = sub.add_parser("summarize", help="comparison table from metric files")
    summ.add_argument("files", nargs="*", help="metric CSV files")
    summ.add_argument("--threshold", type=float, help="accuracy threshold (default: from each run's report)")
    summ.add_argument("--html", action="store_true", help="render the table as HTML")
    summ.add_argument("--series", help="write accuracy-vs-round series CSV here")
    summ.add_argument("--output", help="write the table here instead of stdout")
    summ.set_defaults(func=cmd_summarize)

    ver = sub.add_parser("verify", help="stochasticity and graph-statistics validators")
    ver.add_argument("--devices", type=int, default=100)
    ver.add_argument("--seeds", type=int, default=20)
    ver.add_argument("--skip-stats", action="store_true", help="only check mixing matrices")
    ver.set_defaults(func=cmd_verify)

    pre = sub.add_parser("presets", help="list preset names")
    pre.set_defaults(func=cmd_presets)

    srv = sub.add_parser("serve", help="read-only results API")
    srv.add_argument("--host", default="127.0.0.1")
    srv.add_argument("--port", type=int, default=5050)
    srv.add_argument("--results-dir")
    srv.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format=LOG_FORMAT,
        datefmt=LOG_DATEFMT,
    )
    try:
        return args.func(args)
    except HANDLED_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        logger.exception("Unexpected failure")
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

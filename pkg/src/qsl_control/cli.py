"""Command-line entry point: ``qsl-control <command> --config cfg.json``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import experiment

COMMANDS = ("spectrum", "propagate", "optimize", "qsl-scan", "sweep-eps0", "sweep-gap", "sweep-n", "analyze-field")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qsl-control", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, type=Path, help="experiment config or run manifest (JSON)")
        p.add_argument("--out", type=Path, default=None, help="output directory (overrides output_dir)")
        p.add_argument("--workers", type=int, default=None, help="parallel sweep workers")
        p.add_argument("--verbose", action="store_true")
        if name == "analyze-field":
            p.add_argument("field_csv", type=Path)
    return parser


def run(args: argparse.Namespace) -> Path:
    manifest_command, cfg = experiment.load_config(args.config)
    if manifest_command is not None and manifest_command != args.command:
        raise experiment.ParameterError(
            f"manifest was written by {manifest_command!r}, not {args.command!r}"
        )
    out = args.out if args.out is not None else Path(cfg.output_dir)
    cmd = args.command
    if cmd == "spectrum":
        return experiment.run_spectrum(cfg, out)
    if cmd == "propagate":
        return experiment.run_propagate(cfg, out)
    if cmd == "optimize":
        return experiment.run_optimize(cfg, out)
    if cmd == "qsl-scan":
        return experiment.run_qsl_scan(cfg, out)
    if cmd.startswith("sweep-"):
        axis = {"sweep-eps0": "eps0", "sweep-gap": "delta_b", "sweep-n": "n"}[cmd]
        return experiment.run_sweep(cfg, axis, out, args.workers)
    if cmd == "analyze-field":
        return experiment.run_analyze_field(cfg, args.field_csv, out)
    raise AssertionError(cmd)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(message)s")
    try:
        manifest = run(args)
    except Exception as exc:
        print("error: " + json.dumps({"type": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1
    print(manifest)
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Helpers shared by the experiment scripts."""
import argparse
import csv
import json
import sys
from pathlib import Path

from qsl_control import cli

CONFIGS = Path(__file__).resolve().parent / "configs"


def parser(doc):
    p = argparse.ArgumentParser(description=doc)
    p.add_argument("--out", type=Path, default=Path("results"), help="root output directory")
    p.add_argument("--workers", type=int, default=None, help="parallel sweep workers")
    return p


def run(command, config, out, *extra, overrides=None):
    """Run a CLI command on ``configs/<config>`` (optionally patched); return ``out``."""
    data = json.loads((CONFIGS / config).read_text())
    data.update(overrides or {})
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "config.json"
    path.write_text(json.dumps(data, indent=2) + "\n")
    if cli.main([command, "--config", str(path), "--out", str(out), *map(str, extra)]) != 0:
        sys.exit(f"{command} failed for {config}")
    return out


def rows(path):
    with open(path, encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def workers_flag(args):
    return [] if args.workers is None else ["--workers", args.workers]

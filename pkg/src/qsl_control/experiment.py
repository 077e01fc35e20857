"""Experiment configs, run manifests and the per-command runners used by the CLI.

A config is one JSON document::

    {"system":  {"n_levels": 3, "gaps": [1, 1], "spacing": 10},
     "process": {"initial_index": 0, "goal_index": 2},
     "grid":    {"ratio": 0.91},            # or {"duration": 5.7}
     "guess": {...}, "krotov": {...}, "verdict": {...},
     "scan":  {"t_low": 0.7, "t_high": 1.1, "resolution": 0.01},
     "output_dir": "out"}

Scan brackets and grid ratios are in units of the sudden-switch time of
the process. A sweep replaces ``scan`` with ``{"values": [...], "t_low":
..., "t_high": ..., "resolution": ...}``.
"""
from __future__ import annotations

import copy
import datetime as _dt
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .analysis import baseline_window, field_spectrum
from .dynamics import ControlField, TimeGrid, basis_state, populations, propagate
from .krotov import KrotovConfig, optimize
from .model import ParameterError, SystemSpec, spectrum_table
from .protocols import GuessConfig, ProcessSpec, initial_guess, staircase, sudden_switch_time
from .qsl import QslScanResult, VerdictConfig, qsl_scan
from .tables import read_csv, write_csv, write_json

SWEEP_AXES = ("eps0", "delta_b", "n")
RESULT_COLUMNS = ("N", "eps0", "delta_b", "process", "t_qsl", "resolution", "t_sudden", "ratio", "status")


def _build(cls, data: Optional[dict], what: str):
    data = dict(data or {})
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ParameterError(f"unknown {what} keys: {sorted(unknown)}")
    return cls(**data)


@dataclass
class ExperimentConfig:
    system: SystemSpec
    process: ProcessSpec
    grid: dict = field(default_factory=dict)
    guess: GuessConfig = field(default_factory=GuessConfig)
    krotov: KrotovConfig = field(default_factory=KrotovConfig)
    verdict: VerdictConfig = field(default_factory=VerdictConfig)
    scan: Optional[dict] = None
    sweep: Optional[dict] = None
    spectrum: dict = field(default_factory=dict)
    output_dir: str = "out"

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = copy.deepcopy(data)
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ParameterError(f"unknown config keys: {sorted(unknown)}")
        if "system" not in data:
            raise ParameterError("config needs a 'system' block")
        system = _build(SystemSpec, data["system"], "system")
        process = _build(ProcessSpec, data.get("process", {"initial_index": 0, "goal_index": 2}), "process")
        cfg = cls(
            system=system,
            process=process,
            grid=dict(data.get("grid") or {}),
            guess=_build(GuessConfig, data.get("guess"), "guess"),
            krotov=_build(KrotovConfig, data.get("krotov"), "krotov"),
            verdict=_build(VerdictConfig, data.get("verdict"), "verdict"),
            scan=data.get("scan"),
            sweep=data.get("sweep"),
            spectrum=dict(data.get("spectrum") or {}),
            output_dir=data.get("output_dir", "out"),
        )
        if cfg.scan is not None and cfg.sweep is not None:
            raise ParameterError("config must not hold both 'scan' and 'sweep'")
        if cfg.sweep is not None and not cfg.sweep.get("values"):
            raise ParameterError("sweep needs a non-empty 'values' list")
        return cfg

    def to_dict(self) -> dict:
        out = {
            "system": {"n_levels": self.system.n_levels, "gaps": list(self.system.gaps), "spacing": self.system.spacing},
            "process": asdict(self.process),
            "grid": self.grid,
            "guess": asdict(self.guess),
            "krotov": asdict(self.krotov),
            "verdict": asdict(self.verdict),
            "spectrum": self.spectrum,
            "output_dir": self.output_dir,
        }
        if self.scan is not None:
            out["scan"] = self.scan
        if self.sweep is not None:
            out["sweep"] = self.sweep
        return out

    @property
    def sudden_time(self) -> float:
        return sudden_switch_time(self.system, self.process)

    def time_grid(self) -> TimeGrid:
        g = self.grid
        if "duration" in g and "ratio" in g:
            raise ParameterError("grid takes either 'duration' or 'ratio', not both")
        duration = g["duration"] if "duration" in g else g.get("ratio", 1.0) * self.sudden_time
        if g.get("n_steps"):
            return TimeGrid(duration, g["n_steps"])
        return TimeGrid.for_system(self.system, duration, g.get("max_dt"))


def load_config(path) -> tuple[str | None, ExperimentConfig]:
    """Load a config, or the embedded config of a run manifest.

    Returns ``(command, config)``; ``command`` is set only for manifests.
    """
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if "manifest" in data:
        return data["command"], ExperimentConfig.from_dict(data["config"])
    return None, ExperimentConfig.from_dict(data)


@dataclass
class RunManifest:
    command: str
    config: dict
    outputs: list[str] = field(default_factory=list)
    started: str = ""
    finished: str = ""
    wall_seconds: float = 0.0
    durations: dict = field(default_factory=dict)
    #: files read besides the config, e.g. the field table of analyze-field
    inputs: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "manifest": 1,
            "artifact_version": __version__,
            "command": self.command,
            "config": self.config,
            "outputs": self.outputs,
            "started": self.started,
            "finished": self.finished,
            "wall_seconds": self.wall_seconds,
            "durations": self.durations,
            "inputs": self.inputs,
        }


class _Run:
    """Collects outputs and timing for one command, then writes the manifest."""

    def __init__(self, command: str, cfg: ExperimentConfig, out_dir: Path):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.manifest = RunManifest(command, cfg.to_dict())
        self.t0 = time.perf_counter()
        self.manifest.started = _now()

    def path(self, name: str) -> Path:
        self.manifest.outputs.append(name)
        return self.out_dir / name

    def finish(self) -> Path:
        self.manifest.finished = _now()
        self.manifest.wall_seconds = time.perf_counter() - self.t0
        return write_json(self.out_dir / f"manifest_{self.manifest.command}.json", self.manifest.to_dict())


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def run_spectrum(cfg: ExperimentConfig, out_dir: Path) -> Path:
    run = _Run("spectrum", cfg, out_dir)
    eps = cfg.system.spacing
    n_cross = cfg.system.n_levels - 1
    lo = cfg.spectrum.get("lambda_min", -eps)
    hi = cfg.spectrum.get("lambda_max", max(n_cross, 2) * eps)
    points = int(cfg.spectrum.get("points", 801))
    rows = spectrum_table(cfg.system, np.linspace(lo, hi, points))
    header = ["lambda"] + [f"E_{k}" for k in range(cfg.system.n_levels)]
    write_csv(run.path("spectrum.csv"), header, rows)
    return run.finish()


def _field_rows(field_: ControlField, *others: ControlField):
    t = field_.grid.midpoints
    cols = [field_.values] + [o.values for o in others]
    return [[t[j]] + [c[j] for c in cols] for j in range(t.size)]


def _population_rows(spec: SystemSpec, field_: ControlField, initial: int):
    traj = propagate(spec, field_, basis_state(spec.n_levels, initial))
    pops = populations(traj)
    return [[t] + list(p) for t, p in zip(traj.grid.times, pops)]


def run_propagate(cfg: ExperimentConfig, out_dir: Path) -> Path:
    run = _Run("propagate", cfg, out_dir)
    grid = cfg.time_grid()
    guess = initial_guess(cfg.system, cfg.process, grid, cfg.guess)
    n = cfg.system.n_levels
    write_csv(run.path("field.csv"), ["t", "lambda"], _field_rows(guess))
    write_csv(run.path("populations.csv"), ["t"] + [f"P_{k}" for k in range(n)],
              _population_rows(cfg.system, guess, cfg.process.initial_index))
    return run.finish()


def run_optimize(cfg: ExperimentConfig, out_dir: Path) -> Path:
    run = _Run("optimize", cfg, out_dir)
    grid = cfg.time_grid()
    guess = initial_guess(cfg.system, cfg.process, grid, cfg.guess)
    t0 = time.perf_counter()
    record = optimize(cfg.system, cfg.process, guess, cfg.krotov)
    run.manifest.durations["optimize"] = time.perf_counter() - t0
    record.config = {"krotov": asdict(cfg.krotov), "step_weight_initial": cfg.krotov.weight_for(cfg.system)}
    n = cfg.system.n_levels
    write_json(run.path("record.json"), record.to_dict())
    write_csv(run.path("field.csv"), ["t", "lambda_initial", "lambda_optimized"],
              _field_rows(guess, record.final_field))
    write_csv(run.path("populations.csv"), ["t"] + [f"P_{k}" for k in range(n)],
              _population_rows(cfg.system, record.final_field, cfg.process.initial_index))
    write_csv(run.path("infidelity.csv"), ["iteration", "infidelity"], list(enumerate(record.infidelity_history)))
    return run.finish()


def _scan_bracket(block: dict) -> tuple[float, float, float]:
    try:
        return float(block["t_low"]), float(block["t_high"]), float(block["resolution"])
    except KeyError as exc:
        raise ParameterError(f"scan bracket needs {exc.args[0]!r}") from None


def scan_point(cfg: ExperimentConfig, t_low: float, t_high: float, resolution: float, relative: bool = True) -> QslScanResult:
    scale = cfg.sudden_time if relative else 1.0
    return qsl_scan(
        cfg.system, cfg.process, t_low * scale, t_high * scale, resolution * scale,
        cfg.krotov, cfg.verdict, cfg.guess,
        coarse_points=int((cfg.scan or cfg.sweep or {}).get("coarse_points", 0)),
        max_dt=cfg.grid.get("max_dt"),
    )


def _result_row(cfg: ExperimentConfig, result: Optional[QslScanResult], status: str):
    delta_b = cfg.system.gaps[1] if cfg.system.n_levels > 2 else math.nan
    proc = f"{cfg.process.initial_index}->{cfg.process.goal_index}"
    t_s = cfg.sudden_time
    if result is None:
        return [cfg.system.n_levels, cfg.system.spacing, delta_b, proc, math.nan, math.nan, t_s, math.nan, status]
    return [cfg.system.n_levels, cfg.system.spacing, delta_b, proc, result.t_qsl, result.resolution, t_s,
            result.t_qsl / t_s, status]


def run_qsl_scan(cfg: ExperimentConfig, out_dir: Path) -> Path:
    if cfg.scan is None:
        raise ParameterError("qsl-scan needs a 'scan' block")
    run = _Run("qsl-scan", cfg, out_dir)
    t_low, t_high, res = _scan_bracket(cfg.scan)
    t0 = time.perf_counter()
    result = scan_point(cfg, t_low, t_high, res, cfg.scan.get("relative", True))
    run.manifest.durations["scan"] = time.perf_counter() - t0
    write_json(run.path("scan.json"), result.to_dict())
    write_json(run.path("record_converged.json"), result.converged_record().to_dict())
    write_csv(run.path("results.csv"), RESULT_COLUMNS, [_result_row(cfg, result, "ok")])
    return run.finish()


def point_config(cfg: ExperimentConfig, axis: str, value) -> ExperimentConfig:
    """Config of one sweep point: ``cfg`` with the swept parameter replaced."""
    data = cfg.to_dict()
    data.pop("sweep", None)
    system = data["system"]
    if axis == "eps0":
        system["spacing"] = float(value)
    elif axis == "delta_b":
        if cfg.system.n_levels < 3:
            raise ParameterError("delta_b sweeps need N >= 3")
        system["gaps"][1] = float(value)
    elif axis == "n":
        n = int(value)
        system["n_levels"] = n
        system["gaps"] = [cfg.system.gaps[0]] * (n - 1)
        data["process"] = {"initial_index": 0, "goal_index": n - 1}
    else:
        raise ParameterError(f"unknown sweep axis {axis!r}")
    return ExperimentConfig.from_dict(data)


def _sweep_worker(args):
    data, bracket = args
    cfg = ExperimentConfig.from_dict(data)
    t0 = time.perf_counter()
    try:
        result = scan_point(cfg, *bracket)
    except Exception as exc:  # recorded in the table; the sweep continues
        return None, f"failed: {type(exc).__name__}: {exc}", time.perf_counter() - t0
    return result.to_dict(), "ok", time.perf_counter() - t0


def run_sweep(cfg: ExperimentConfig, axis: str, out_dir: Path, workers: Optional[int] = None) -> Path:
    if axis not in SWEEP_AXES:
        raise ParameterError(f"unknown sweep axis {axis!r}")
    if cfg.sweep is None or not cfg.sweep.get("values"):
        raise ParameterError("sweep needs a non-empty 'values' list")
    run = _Run(f"sweep-{axis}", cfg, out_dir)
    values = sorted(cfg.sweep["values"])
    bracket = _scan_bracket(cfg.sweep)
    points = [point_config(cfg, axis, v) for v in values]
    jobs = [(p.to_dict(), bracket) for p in points]
    workers = workers or os.cpu_count() or 1
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            outcomes = list(pool.map(_sweep_worker, jobs))
    else:
        outcomes = [_sweep_worker(j) for j in jobs]
    rows = []
    for value, point, (scan, status, seconds) in zip(values, points, outcomes):
        run.manifest.durations[str(value)] = seconds
        result = None
        if scan is not None:
            result = QslScanResult.from_dict(scan)
            write_json(run.path(f"scan_{axis}_{value:g}.json"), scan)
        rows.append(_result_row(point, result, status))
    write_csv(run.path("results.csv"), RESULT_COLUMNS, rows)
    return run.finish()


def load_field_csv(path) -> ControlField:
    """Field table with columns ``t`` and a field column (last column used)."""
    header, rows = read_csv(path)
    if len(rows) < 2:
        raise ParameterError(f"{path}: need at least 2 field samples")
    data = np.asarray(rows)
    t = data[:, 0]
    dt = float(np.mean(np.diff(t)))
    if not np.allclose(np.diff(t), dt, rtol=1e-6, atol=1e-12):
        raise ParameterError(f"{path}: field samples are not uniformly spaced")
    grid = TimeGrid(dt * len(t), len(t))
    return ControlField(grid, data[:, -1])


def run_analyze_field(cfg: ExperimentConfig, field_csv: Path, out_dir: Path) -> Path:
    run = _Run("analyze-field", cfg, out_dir)
    run.manifest.inputs["field_csv"] = str(field_csv)
    fld = load_field_csv(field_csv)
    window = int(cfg.spectrum.get("window") or baseline_window(fld.grid, cfg.system.spacing))
    breaks = staircase(cfg.system, cfg.process).switch_times(fld.grid.duration)
    spec = field_spectrum(fld, window, breaks)
    write_csv(run.path("field_spectrum.csv"), ["frequency", "amplitude"], zip(spec.frequencies, spec.amplitudes))
    write_json(run.path("field_summary.json"), {
        "dominant_frequency": spec.dominant_frequency,
        "max_amplitude": spec.max_amplitude,
        "bin_width": spec.bin_width,
        "window": window,
        "expected_frequency": cfg.system.spacing / (2 * math.pi),
    })
    return run.finish()

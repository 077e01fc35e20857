"""Heuristic quantum-speed-limit time from optimizer convergence behaviour.

A fixed-T optimization is *converging* when its infidelity history either
reaches the success threshold or still curves downward (negative mean
second difference) at the end of the run; otherwise it is *stalled*.
The QSL time is the boundary between the two, located by bisection on T.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .dynamics import TimeGrid
from .krotov import KrotovConfig, KrotovRecord, optimize
from .model import ParameterError, SystemSpec
from .protocols import GuessConfig, ProcessSpec, initial_guess, sudden_switch_time

log = logging.getLogger(__name__)

CONVERGING = "converging"
STALLED = "stalled"


class InsufficientHistoryError(ValueError):
    pass


class ScanBracketError(RuntimeError):
    pass


class CriterionInstabilityError(RuntimeError):
    pass


@dataclass(frozen=True)
class VerdictConfig:
    tail_fraction: float = 0.25
    smoothing_window: int = 21
    curvature_tolerance: float = 1e-12
    success_infidelity: float = 1e-4

    def __post_init__(self):
        if not 0 < self.tail_fraction <= 1:
            raise ParameterError("tail_fraction must lie in (0, 1]")
        if self.smoothing_window < 3 or self.smoothing_window % 2 == 0:
            raise ParameterError("smoothing_window must be odd and >= 3")
        if self.curvature_tolerance < 0 or self.success_infidelity < 0:
            raise ParameterError("tolerances must be non-negative")

    def min_history(self) -> int:
        return max(math.ceil(2 * self.smoothing_window / self.tail_fraction), math.ceil(50 / self.tail_fraction))


def tail_curvature(history: Sequence[float], cfg: VerdictConfig) -> float:
    """Mean second difference of the moving-averaged tail of ``history``."""
    h = np.asarray(history, dtype=float)
    tail = h[-max(math.ceil(cfg.tail_fraction * h.size), 50):]
    w = cfg.smoothing_window
    smooth = np.convolve(tail, np.ones(w) / w, mode="valid")
    return float(np.mean(np.diff(smooth, 2)))


def convergence_verdict(
    record: Union[KrotovRecord, Sequence[float]], cfg: VerdictConfig = VerdictConfig()
) -> str:
    if isinstance(record, KrotovRecord):
        history, how = record.infidelity_history, record.terminated_by
    else:
        history, how = list(record), None
    if min(history) <= cfg.success_infidelity:
        return CONVERGING
    if len(history) < cfg.min_history():
        if how == "step_stalled":
            return STALLED
        raise InsufficientHistoryError(
            f"history of {len(history)} entries is too short for the curvature test; "
            f"run at least {cfg.min_history()} iterations"
        )
    return CONVERGING if tail_curvature(history, cfg) < -cfg.curvature_tolerance else STALLED


@dataclass
class QslScanResult:
    probed_times: list[float]
    verdicts: list[str]
    t_qsl: float
    resolution: float
    final_infidelities: list[float] = field(default_factory=list)
    iterations: list[int] = field(default_factory=list)
    sudden_switch_time: float = math.nan
    #: optimizer records keyed by probed time; not serialized
    records: dict = field(default_factory=dict, repr=False)

    @property
    def bracket(self) -> tuple[float, float]:
        return self.t_qsl - self.resolution, self.t_qsl + self.resolution

    @property
    def ratio(self) -> float:
        return self.t_qsl / self.sudden_switch_time

    def converged_record(self) -> KrotovRecord:
        """Record of the shortest converging probe."""
        t = min(t for t, v in zip(self.probed_times, self.verdicts) if v == CONVERGING)
        return self.records[t]

    def to_dict(self) -> dict:
        return {
            "t_qsl": self.t_qsl,
            "resolution": self.resolution,
            "sudden_switch_time": self.sudden_switch_time,
            "probed_times": self.probed_times,
            "verdicts": self.verdicts,
            "final_infidelities": self.final_infidelities,
            "iterations": self.iterations,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "QslScanResult":
        keys = ("probed_times", "verdicts", "t_qsl", "resolution", "final_infidelities", "iterations", "sudden_switch_time")
        return cls(**{k: data[k] for k in keys if k in data})


def run_at(
    spec: SystemSpec,
    process: ProcessSpec,
    duration: float,
    krotov_cfg: KrotovConfig = KrotovConfig(),
    guess_cfg: GuessConfig = GuessConfig(),
    max_dt: Optional[float] = None,
) -> KrotovRecord:
    """Optimize from the standard initial guess at a fixed evolution time."""
    grid = TimeGrid.for_system(spec, duration, max_dt)
    return optimize(spec, process, initial_guess(spec, process, grid, guess_cfg), krotov_cfg)


def check_monotone(times: Sequence[float], verdicts: Sequence[str]) -> None:
    order = np.argsort(times)
    seq = [verdicts[i] for i in order]
    first = seq.index(CONVERGING) if CONVERGING in seq else len(seq)
    if STALLED in seq[first:]:
        pairs = ", ".join(f"{times[i]:.6g}:{verdicts[i]}" for i in order)
        raise CriterionInstabilityError(f"non-monotone verdicts over T: {pairs}")


def qsl_scan(
    spec: SystemSpec,
    process: ProcessSpec,
    t_low: float,
    t_high: float,
    resolution: float,
    krotov_cfg: KrotovConfig = KrotovConfig(),
    verdict_cfg: VerdictConfig = VerdictConfig(),
    guess_cfg: GuessConfig = GuessConfig(),
    *,
    coarse_points: int = 0,
    max_dt: Optional[float] = None,
    on_probe: Optional[Callable[[float, str, KrotovRecord], None]] = None,
) -> QslScanResult:
    """Bisect on T between a stalled ``t_low`` and a converging ``t_high``.

    ``resolution`` is the final bracket width; the reported QSL time is the
    bracket midpoint. ``coarse_points`` > 0 evaluates an evenly spaced
    pre-grid inside the bracket first.
    """
    if not 0 < t_low < t_high:
        raise ParameterError(f"need 0 < t_low < t_high, got {t_low}, {t_high}")
    if not resolution > 0:
        raise ParameterError("resolution must be positive")
    result = QslScanResult([], [], math.nan, math.nan, sudden_switch_time=sudden_switch_time(spec, process))

    def probe(t: float) -> str:
        record = run_at(spec, process, t, krotov_cfg, guess_cfg, max_dt)
        verdict = convergence_verdict(record, verdict_cfg)
        log.info("T=%.6g verdict=%s I=%.3e after %d iterations", t, verdict, record.final_infidelity, record.iterations_run)
        result.probed_times.append(t)
        result.verdicts.append(verdict)
        result.final_infidelities.append(record.final_infidelity)
        result.iterations.append(record.iterations_run)
        result.records[t] = record
        if on_probe is not None:
            on_probe(t, verdict, record)
        return verdict

    if probe(t_low) != STALLED:
        raise ScanBracketError(f"lower endpoint T={t_low:g} already converges; lower t_low")
    if probe(t_high) != CONVERGING:
        raise ScanBracketError(f"upper endpoint T={t_high:g} does not converge; raise t_high")
    lo, hi = t_low, t_high
    if coarse_points > 0:
        for t in np.linspace(t_low, t_high, coarse_points + 2)[1:-1]:
            probe(float(t))
        check_monotone(result.probed_times, result.verdicts)
        lo = max(t for t, v in zip(result.probed_times, result.verdicts) if v == STALLED)
        hi = min(t for t, v in zip(result.probed_times, result.verdicts) if v == CONVERGING)
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        if probe(mid) == CONVERGING:
            hi = mid
        else:
            lo = mid
    check_monotone(result.probed_times, result.verdicts)
    order = np.argsort(result.probed_times, kind="stable")
    for name in ("probed_times", "verdicts", "final_infidelities", "iterations"):
        values = getattr(result, name)
        setattr(result, name, [values[i] for i in order])
    result.t_qsl = 0.5 * (lo + hi)
    result.resolution = 0.5 * (hi - lo)
    return result

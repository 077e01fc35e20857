"""Sudden-switch reference protocols and optimizer initial guesses."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.ndimage import gaussian_filter1d, uniform_filter1d

from .dynamics import ControlField, TimeGrid, basis_state
from .model import ParameterError, SystemSpec, build_hamiltonian

MIN_INTERVALS_PER_SEGMENT = 10


@dataclass(frozen=True)
class ProcessSpec:
    initial_index: int
    goal_index: int

    def __post_init__(self):
        if self.initial_index == self.goal_index:
            raise ParameterError("initial and goal states must differ")
        if min(self.initial_index, self.goal_index) < 0:
            raise ParameterError("state indices must be non-negative")

    def check(self, spec: SystemSpec) -> None:
        top = max(self.initial_index, self.goal_index)
        if top >= spec.n_levels:
            raise ParameterError(f"state index {top} outside a {spec.n_levels}-level system")

    @property
    def crossings(self) -> list[int]:
        """Avoided crossings traversed, in the order the path visits them.

        Crossing ``j`` couples diabatic states ``j`` and ``j+1``.
        """
        lo, hi = sorted((self.initial_index, self.goal_index))
        path = list(range(lo, hi))
        return path if self.initial_index < self.goal_index else path[::-1]


PROCESS_I = ProcessSpec(1, 0)
PROCESS_II = ProcessSpec(0, 2)


@dataclass(frozen=True)
class GuessConfig:
    """Smoothing and linear tilt applied to the rescaled staircase.

    ``smoothing_width=None`` means 2% of the evolution time.
    """

    smoothing_width: Optional[float] = None
    linear_slope_fraction: float = 0.05
    kernel: str = "gaussian"

    def __post_init__(self):
        if self.smoothing_width is not None and not self.smoothing_width > 0:
            raise ParameterError("smoothing_width must be positive")
        if abs(self.linear_slope_fraction) > 0.2:
            raise ParameterError("|linear_slope_fraction| must be <= 0.2")
        if self.kernel not in ("gaussian", "boxcar"):
            raise ParameterError(f"unknown smoothing kernel {self.kernel!r}")

    def width_for(self, duration: float) -> float:
        return 0.02 * duration if self.smoothing_width is None else self.smoothing_width


@dataclass(frozen=True)
class Staircase:
    levels: tuple[float, ...]
    durations: tuple[float, ...]

    @property
    def total_time(self) -> float:
        return float(sum(self.durations))

    def edges(self, duration: Optional[float] = None) -> np.ndarray:
        """Segment boundaries (including 0 and the end), stretched to ``duration``."""
        scale = 1.0 if duration is None else duration / self.total_time
        return np.concatenate([[0.0], np.cumsum(self.durations)]) * scale

    def switch_times(self, duration: Optional[float] = None) -> np.ndarray:
        return self.edges(duration)[1:-1]

    def __call__(self, t, duration: Optional[float] = None) -> np.ndarray:
        """Evaluate the staircase stretched to ``duration`` at times ``t``."""
        inner = self.switch_times(duration)
        idx = np.searchsorted(inner, np.asarray(t, dtype=float), side="right")
        return np.asarray(self.levels)[idx]


def crossing_positions(spec: SystemSpec) -> np.ndarray:
    """Control values where diabatic levels j and j+1 are degenerate."""
    return np.arange(spec.n_levels - 1) * spec.spacing


def staircase(spec: SystemSpec, process: ProcessSpec) -> Staircase:
    process.check(spec)
    pos = crossing_positions(spec)
    path = process.crossings
    return Staircase(
        tuple(float(pos[j]) for j in path),
        tuple(math.pi / spec.gaps[j] for j in path),
    )


def sudden_switch_time(spec: SystemSpec, process: ProcessSpec) -> float:
    return staircase(spec, process).total_time


def apportion(weights, total: int) -> np.ndarray:
    """Integer counts summing to ``total`` (largest-remainder method)."""
    weights = np.asarray(weights, dtype=float)
    exact = total * weights / weights.sum()
    counts = np.floor(exact).astype(int)
    order = np.argsort(-(exact - counts), kind="stable")
    counts[order[: total - counts.sum()]] += 1
    return counts


def sudden_switch(
    spec: SystemSpec, process: ProcessSpec, grid: Optional[TimeGrid] = None
) -> tuple[ControlField, float]:
    """Staircase field and its analytic duration ``sum_j pi / gap_j``.

    With no grid, the field is sampled on the default grid spanning the
    sudden-switch time. Segment durations are stretched to the grid
    duration and rounded to whole intervals.
    """
    stairs = staircase(spec, process)
    if grid is None:
        grid = TimeGrid.for_system(spec, stairs.total_time)
    counts = apportion(stairs.durations, grid.n_steps)
    if counts.min() < MIN_INTERVALS_PER_SEGMENT:
        raise ParameterError(
            f"grid of {grid.n_steps} intervals gives a segment only {counts.min()} intervals long; "
            f"need >= {MIN_INTERVALS_PER_SEGMENT}"
        )
    values = np.repeat(stairs.levels, counts)
    return ControlField(grid, values), stairs.total_time


def sudden_switch_final_state(spec: SystemSpec, process: ProcessSpec) -> np.ndarray:
    """Exact (ungridded) evolution under the sudden-switch staircase."""
    stairs = staircase(spec, process)
    psi = basis_state(spec.n_levels, process.initial_index)
    for lam, dur in zip(stairs.levels, stairs.durations):
        e, v = np.linalg.eigh(build_hamiltonian(spec, lam))
        psi = v @ (np.exp(-1j * e * dur) * (v.conj().T @ psi))
    return psi


def initial_guess(
    spec: SystemSpec, process: ProcessSpec, grid: TimeGrid, cfg: GuessConfig = GuessConfig()
) -> ControlField:
    """Stretched, smoothed and tilted sudden-switch staircase.

    The staircase is stretched to the grid duration, sampled at interval
    midpoints, smoothed with a kernel of standard deviation
    ``cfg.width_for(T)`` (reflective boundaries) and tilted by
    ``alpha * eps0 * (t/T - 1/2)``.
    """
    stairs = staircase(spec, process)
    T = grid.duration
    width = cfg.width_for(T)
    shortest = min(stairs.durations) * T / stairs.total_time
    if width >= shortest:
        raise ParameterError(
            f"smoothing width {width:g} >= shortest stretched segment {shortest:g}"
        )
    if width >= T / 10:
        raise ParameterError(f"smoothing width {width:g} must be < T/10 = {T / 10:g}")
    t = grid.midpoints
    values = stairs(t, T).astype(float)
    sigma = width / grid.dt
    if cfg.kernel == "gaussian":
        values = gaussian_filter1d(values, sigma, mode="reflect")
    else:
        # boxcar with the same standard deviation
        size = max(1, int(round(sigma * math.sqrt(12.0))))
        values = uniform_filter1d(values, size, mode="reflect")
    values = values + cfg.linear_slope_fraction * spec.spacing * (t / T - 0.5)
    return ControlField(grid, values)

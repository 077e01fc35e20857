"""Exact piecewise-constant Schrodinger propagation and state diagnostics."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .model import ParameterError, SystemSpec, build_hamiltonian, control_diagonal, static_part


@dataclass(frozen=True)
class TimeGrid:
    duration: float
    n_steps: int

    def __post_init__(self):
        if not (math.isfinite(self.duration) and self.duration > 0):
            raise ParameterError(f"duration must be positive, got {self.duration}")
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise ParameterError(f"n_steps must be an integer >= 1, got {self.n_steps}")
        object.__setattr__(self, "n_steps", int(self.n_steps))

    @property
    def dt(self) -> float:
        return self.duration / self.n_steps

    @property
    def times(self) -> np.ndarray:
        """The M+1 grid points, t=0 .. T."""
        return np.linspace(0.0, self.duration, self.n_steps + 1)

    @property
    def midpoints(self) -> np.ndarray:
        return (np.arange(self.n_steps) + 0.5) * self.dt

    @classmethod
    def for_system(cls, spec: SystemSpec, duration: float, max_dt: float | None = None) -> "TimeGrid":
        """Uniform grid with ``dt <= min(0.02/gap_min, 0.1/eps0)``."""
        if max_dt is None:
            max_dt = default_max_dt(spec)
        return cls(duration, max(1, math.ceil(duration / max_dt - 1e-9)))


def default_max_dt(spec: SystemSpec) -> float:
    return min(0.02 / spec.min_gap, 0.1 / spec.spacing)


@dataclass(frozen=True, eq=False)
class ControlField:
    """Control values, one constant value per grid interval."""

    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (self.grid.n_steps,):
            raise ParameterError(
                f"field has {values.size} values for a grid of {self.grid.n_steps} intervals"
            )
        if not np.all(np.isfinite(values)):
            bad = int(np.flatnonzero(~np.isfinite(values))[0])
            raise ParameterError(f"non-finite field value on interval {bad}")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @classmethod
    def constant(cls, grid: TimeGrid, value: float) -> "ControlField":
        return cls(grid, np.full(grid.n_steps, float(value)))

    def refined(self, factor: int) -> "ControlField":
        """The same piecewise-constant function on a grid ``factor`` times finer."""
        grid = TimeGrid(self.grid.duration, self.grid.n_steps * factor)
        return ControlField(grid, np.repeat(self.values, factor))


@dataclass(frozen=True, eq=False)
class Trajectory:
    grid: TimeGrid
    states: np.ndarray

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


def basis_state(n_levels: int, index: int) -> np.ndarray:
    if not 0 <= index < n_levels:
        raise ParameterError(f"basis index {index} outside 0..{n_levels - 1}")
    psi = np.zeros(n_levels, dtype=complex)
    psi[index] = 1.0
    return psi


def _check_state(spec: SystemSpec, state: np.ndarray, what: str) -> np.ndarray:
    state = np.asarray(state, dtype=complex)
    if state.shape != (spec.n_levels,):
        raise ParameterError(f"{what} has shape {state.shape}, expected ({spec.n_levels},)")
    return state


def step_unitaries(spec: SystemSpec, field: ControlField) -> np.ndarray:
    """``exp(-i H(lambda_j) dt)`` for every interval, shape (M, N, N)."""
    return _kernels.unitaries(static_part(spec), control_diagonal(spec), field.values, field.grid.dt)


def propagate(spec: SystemSpec, field: ControlField, initial) -> Trajectory:
    initial = _check_state(spec, initial, "initial state")
    us = step_unitaries(spec, field)
    return Trajectory(field.grid, _kernels.forward_states(us, initial))


def populations(traj: Trajectory) -> np.ndarray:
    return np.abs(traj.states) ** 2


def infidelity(final, goal) -> float:
    final = np.asarray(final, dtype=complex)
    goal = np.asarray(goal, dtype=complex)
    if final.shape != goal.shape:
        raise ParameterError(f"dimension mismatch: {final.shape} vs {goal.shape}")
    return float(min(1.0, max(0.0, 1.0 - abs(np.vdot(goal, final)) ** 2)))


def energy_spread(spec: SystemSpec, lambda_value: float, state) -> float:
    """Standard deviation of H(lambda) in ``state``."""
    state = _check_state(spec, state, "state")
    h = build_hamiltonian(spec, lambda_value)
    hpsi = h @ state
    mean = np.vdot(state, hpsi).real
    second = np.vdot(hpsi, hpsi).real
    return math.sqrt(max(second - mean**2, 0.0))


def mt_bound(spec: SystemSpec, lambda_value: float, initial, final) -> float:
    """Mandelstam-Tamm minimum time ``arccos|<initial|final>| / dE``.

    Returns ``math.inf`` when the energy spread vanishes but the states
    differ: a stationary state never reaches another state, so no finite
    bound exists.
    """
    initial = _check_state(spec, initial, "initial state")
    final = _check_state(spec, final, "final state")
    overlap = min(1.0, abs(np.vdot(initial, final)))
    angle = math.acos(overlap)
    spread = energy_spread(spec, lambda_value, initial)
    if spread <= 1e-14 * max(1.0, spec.spacing, max(spec.gaps)):
        return 0.0 if angle <= 1e-7 else math.inf
    return angle / spread

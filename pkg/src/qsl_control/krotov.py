"""First-order sequential Krotov optimization for state-to-state transfer.

Update for interval j (the state is the one already driven by the updated
values on earlier intervals)::

    lam_new[j] = lam_old[j] + S[j] / mu * Im <chi(t_j)| dH/dlam |psi_new(t_j)>

with the costate seeded as ``chi(T) = <goal|psi(T)> |goal>`` and propagated
backwards under the old field. A step that raises the infidelity is
rejected and retried with ``mu`` doubled, so recorded histories are
monotone.
"""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from . import _kernels
from .dynamics import ControlField, TimeGrid, Trajectory, basis_state, infidelity, step_unitaries
from .model import ParameterError, SystemSpec, control_diagonal, static_part
from .protocols import ProcessSpec

log = logging.getLogger(__name__)

#: tolerance for accepting a step as non-increasing
ACCEPT_SLACK = 1e-12


@dataclass(frozen=True)
class KrotovConfig:
    """Optimizer settings.

    ``step_weight=None`` selects ``mu = 50 * gap_min / eps0**2``. The
    gradient falls off like ``gap/eps0`` while the required field excursions
    grow like ``eps0``, hence the square.
    """

    step_weight: Optional[float] = None
    shape_profile: str = "flat"
    edge_fraction: float = 0.1
    max_iterations: int = 5000
    target_infidelity: float = 1e-4
    backoff_factor: float = 2.0
    max_backoffs: int = 60

    def __post_init__(self):
        if self.step_weight is not None and not self.step_weight > 0:
            raise ParameterError("step_weight must be positive")
        if self.shape_profile not in ("flat", "ramped"):
            raise ParameterError(f"unknown shape_profile {self.shape_profile!r}")
        if self.shape_profile == "ramped" and not 0 < self.edge_fraction < 0.5:
            raise ParameterError("edge_fraction must lie in (0, 0.5)")
        if int(self.max_iterations) != self.max_iterations or self.max_iterations < 1:
            raise ParameterError("max_iterations must be an integer >= 1")
        if self.target_infidelity < 0:
            raise ParameterError("target_infidelity must be non-negative")
        if not self.backoff_factor > 1:
            raise ParameterError("backoff_factor must exceed 1")

    def weight_for(self, spec: SystemSpec) -> float:
        if self.step_weight is not None:
            return self.step_weight
        return 50.0 * spec.min_gap / spec.spacing**2


@dataclass(eq=False)
class KrotovRecord:
    infidelity_history: list[float]
    final_field: ControlField
    iterations_run: int
    terminated_by: str
    step_weight: float = math.nan
    config: dict = field(default_factory=dict)

    @property
    def final_infidelity(self) -> float:
        return self.infidelity_history[-1]

    def to_dict(self) -> dict:
        grid = self.final_field.grid
        return {
            "config": self.config,
            "iterations_run": self.iterations_run,
            "terminated_by": self.terminated_by,
            "step_weight": self.step_weight,
            "infidelity_history": [float(x) for x in self.infidelity_history],
            "final_field": {
                "duration": grid.duration,
                "n_steps": grid.n_steps,
                "values": [float(x) for x in self.final_field.values],
            },
        }

    @classmethod
    def from_dict(cls, data: dict) -> "KrotovRecord":
        f = data["final_field"]
        grid = TimeGrid(f["duration"], f["n_steps"])
        return cls(
            infidelity_history=list(data["infidelity_history"]),
            final_field=ControlField(grid, np.asarray(f["values"], dtype=float)),
            iterations_run=data["iterations_run"],
            terminated_by=data["terminated_by"],
            step_weight=data.get("step_weight", math.nan),
            config=data.get("config", {}),
        )


def update_shape(grid: TimeGrid, cfg: KrotovConfig) -> np.ndarray:
    """Update shape S(t) at interval midpoints (sin^2 ramps if requested)."""
    if cfg.shape_profile == "flat":
        return np.ones(grid.n_steps)
    t = grid.midpoints
    ramp = cfg.edge_fraction * grid.duration
    edge = np.minimum(t, grid.duration - t) / ramp
    return np.where(edge >= 1.0, 1.0, np.sin(0.5 * np.pi * np.clip(edge, 0.0, 1.0)) ** 2)


def backward_propagate(spec: SystemSpec, field: ControlField, terminal_costate) -> Trajectory:
    """Costate trajectory: ``chi_j = U_j^dagger chi_{j+1}`` from ``chi_M``."""
    terminal_costate = np.asarray(terminal_costate, dtype=complex)
    if terminal_costate.shape != (spec.n_levels,):
        raise ParameterError(f"costate has shape {terminal_costate.shape}, expected ({spec.n_levels},)")
    us = step_unitaries(spec, field)
    return Trajectory(field.grid, _kernels.backward_states(us, terminal_costate))


class _Engine:
    """Holds the per-run arrays so the forward propagators are reused."""

    def __init__(self, spec: SystemSpec, process: ProcessSpec, field: ControlField, cfg: KrotovConfig):
        process.check(spec)
        self.h0 = static_part(spec)
        self.p = control_diagonal(spec)
        self.psi0 = basis_state(spec.n_levels, process.initial_index)
        self.goal = basis_state(spec.n_levels, process.goal_index)
        self.grid = field.grid
        self.shape = update_shape(field.grid, cfg)
        self.values = np.array(field.values)
        self.us = _kernels.unitaries(self.h0, self.p, self.values, self.grid.dt)
        self.psi_t = _kernels.forward_states(self.us, self.psi0)[-1]

    @property
    def infidelity(self) -> float:
        return infidelity(self.psi_t, self.goal)

    def costates(self) -> np.ndarray:
        tau = np.vdot(self.goal, self.psi_t)
        return _kernels.backward_states(self.us, tau * self.goal)

    def trial(self, chi: np.ndarray, mu: float):
        new, us, psi_t, bad = _kernels.sweep(
            self.h0, self.p, self.values, self.grid.dt, self.psi0, chi, self.shape, 1.0 / mu
        )
        if bad >= 0:
            raise FloatingPointError(
                f"non-finite field update on interval {bad} (t={bad * self.grid.dt:g}); step weight {mu:g}"
            )
        return new, us, psi_t

    def accept(self, new, us, psi_t) -> None:
        self.values, self.us, self.psi_t = new, us, psi_t


def krotov_step(
    spec: SystemSpec,
    process: ProcessSpec,
    field: ControlField,
    cfg: KrotovConfig = KrotovConfig(),
    step_weight: Optional[float] = None,
) -> tuple[ControlField, float]:
    """One sequential update with a fixed step weight (no backoff)."""
    engine = _Engine(spec, process, field, cfg)
    mu = cfg.weight_for(spec) if step_weight is None else step_weight
    new, _, psi_t = engine.trial(engine.costates(), mu)
    return ControlField(field.grid, new), infidelity(psi_t, engine.goal)


def gradient_overlaps(spec: SystemSpec, process: ProcessSpec, field: ControlField) -> np.ndarray:
    """``Im <chi(t_j)| dH/dlam |psi(t_j)>`` for the unmodified field."""
    engine = _Engine(spec, process, field, KrotovConfig())
    psi = _kernels.forward_states(engine.us, engine.psi0)
    return _kernels.overlaps(engine.costates()[:-1], engine.p, psi[:-1])


def optimize(
    spec: SystemSpec,
    process: ProcessSpec,
    guess: ControlField,
    cfg: KrotovConfig = KrotovConfig(),
) -> KrotovRecord:
    engine = _Engine(spec, process, guess, cfg)
    mu = cfg.weight_for(spec)
    history = [engine.infidelity]
    terminated_by = "iteration_cap"
    iterations = 0
    while True:
        if history[-1] <= cfg.target_infidelity:
            terminated_by = "target_reached"
            break
        if iterations >= cfg.max_iterations:
            break
        chi = engine.costates()
        for _ in range(cfg.max_backoffs + 1):
            new, us, psi_t = engine.trial(chi, mu)
            value = infidelity(psi_t, engine.goal)
            if value <= history[-1] + ACCEPT_SLACK:
                break
            mu *= cfg.backoff_factor
        else:
            # no step size improves the infidelity any more
            terminated_by = "step_stalled"
            break
        engine.accept(new, us, psi_t)
        history.append(value)
        iterations += 1
    log.debug("krotov: %d iterations, I=%.3e, %s", iterations, history[-1], terminated_by)
    return KrotovRecord(
        infidelity_history=history,
        final_field=ControlField(guess.grid, engine.values),
        iterations_run=iterations,
        terminated_by=terminated_by,
        step_weight=mu,
        config=asdict(cfg),
    )

"""N-level avoided-crossing model in the diabatic basis.

Diagonal entries are ``lambda - n*eps0`` on even states ``|2n>`` and
``n*eps0`` on odd states ``|2n+1>``; nearest neighbours ``n, n+1`` are
coupled by ``gaps[n] / 2``. Every other matrix element is zero, so the
non-adjacent diabatic crossings stay exact. Units: hbar = 1.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


class ParameterError(ValueError):
    """Invalid model, grid or configuration parameters."""


@dataclass(frozen=True)
class SystemSpec:
    n_levels: int
    gaps: tuple[float, ...]
    spacing: float = 10.0

    def __post_init__(self):
        object.__setattr__(self, "gaps", tuple(float(g) for g in self.gaps))
        if int(self.n_levels) != self.n_levels or self.n_levels < 2:
            raise ParameterError(f"n_levels must be an integer >= 2, got {self.n_levels}")
        if len(self.gaps) != self.n_levels - 1:
            raise ParameterError(
                f"need {self.n_levels - 1} gaps for N={self.n_levels}, got {len(self.gaps)}"
            )
        if not all(np.isfinite(g) and g > 0 for g in self.gaps):
            raise ParameterError(f"gaps must be finite and positive, got {self.gaps}")
        if not (np.isfinite(self.spacing) and self.spacing > 0):
            raise ParameterError(f"spacing must be finite and positive, got {self.spacing}")

    @classmethod
    def uniform(cls, n_levels: int, gap: float = 1.0, spacing: float = 10.0) -> "SystemSpec":
        return cls(n_levels, (gap,) * (n_levels - 1), spacing)

    @classmethod
    def three_level(cls, delta_a: float, delta_b: float, spacing: float) -> "SystemSpec":
        return cls(3, (delta_a, delta_b), spacing)

    @property
    def min_gap(self) -> float:
        return min(self.gaps)

    def scaled(self, s: float) -> "SystemSpec":
        """Same model with every energy multiplied by ``s``."""
        return SystemSpec(self.n_levels, tuple(s * g for g in self.gaps), s * self.spacing)


def static_part(spec: SystemSpec) -> np.ndarray:
    """``H_N(0)``: the lambda-independent part (real symmetric)."""
    n = spec.n_levels
    h = np.zeros((n, n))
    for k in range(n):
        h[k, k] = -(k // 2) * spec.spacing if k % 2 == 0 else (k // 2) * spec.spacing
    for k, g in enumerate(spec.gaps):
        h[k, k + 1] = h[k + 1, k] = g / 2
    return h


def control_diagonal(spec: SystemSpec) -> np.ndarray:
    """Diagonal of dH/dlambda: 1 on even diabatic states, 0 on odd ones."""
    return (np.arange(spec.n_levels) % 2 == 0).astype(float)


def build_hamiltonian(spec: SystemSpec, lambda_value: float) -> np.ndarray:
    h = static_part(spec).astype(complex)
    h[np.diag_indices(spec.n_levels)] += lambda_value * control_diagonal(spec)
    return h


def coupling_derivative(spec: SystemSpec) -> np.ndarray:
    return np.diag(control_diagonal(spec)).astype(complex)


def eigen_spectrum(spec: SystemSpec, lambda_value: float) -> np.ndarray:
    """Ascending eigenvalues of ``H_N(lambda)``."""
    return np.linalg.eigvalsh(build_hamiltonian(spec, lambda_value))


def spectrum_table(spec: SystemSpec, lambdas: Sequence[float]) -> np.ndarray:
    """Rows ``(lambda, E_0, ..., E_{N-1})`` for a sweep of the control."""
    lambdas = np.asarray(lambdas, dtype=float)
    rows = np.empty((lambdas.size, spec.n_levels + 1))
    rows[:, 0] = lambdas
    for i, lam in enumerate(lambdas):
        rows[i, 1:] = eigen_spectrum(spec, lam)
    return rows

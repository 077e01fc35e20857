"""Post-processing of optimized fields and of QSL scan results."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .dynamics import ControlField, TimeGrid
from .model import ParameterError


@dataclass(eq=False)
class FieldSpectrum:
    """One-sided amplitude spectrum of the oscillatory part of a field.

    ``dominant_frequency`` is None when the field carries no oscillation.
    ``power`` is the per-bin squared DFT magnitude summed over segments.
    """

    frequencies: np.ndarray
    amplitudes: np.ndarray
    dominant_frequency: Optional[float]
    max_amplitude: float
    bin_width: float
    power: np.ndarray = field(repr=False, default=None)
    residual: np.ndarray = field(repr=False, default=None)
    taper_power: float = 1.0

    def residual_energy(self) -> float:
        return float(np.sum(self.residual**2))

    def spectral_energy(self) -> float:
        """Residual energy recovered from the spectrum, corrected for the taper."""
        n = self.residual.size
        weights = np.full(self.power.size, 2.0)
        weights[0] = 1.0
        if n % 2 == 0:
            weights[-1] = 1.0
        return float(np.sum(weights * self.power) / n / self.taper_power)


def baseline_window(grid: TimeGrid, spacing: float, periods: int = 5) -> int:
    """Odd moving-average width spanning whole periods of ``2*pi/spacing``.

    Uses ``periods`` periods, or fewer when that would exceed half the record
    (never fewer than one).
    """
    period = 2 * math.pi / spacing
    fit = int((grid.duration / 2) // period)
    k = max(1, min(periods, fit))
    w = int(round(k * period / grid.dt))
    return max(3, w | 1)


def _moving_average(values: np.ndarray, window: int) -> np.ndarray:
    half = window // 2
    padded = np.pad(values, half, mode="reflect", reflect_type="odd")
    csum = np.concatenate([[0.0], np.cumsum(padded)])
    return (csum[window:] - csum[:-window]) / window


def _check_window(n: int, window: int) -> None:
    if window < 3 or window % 2 == 0:
        raise ParameterError(f"window must be odd and >= 3, got {window}")
    if window > n // 2:
        raise ParameterError(f"window {window} is wider than half the record ({n} samples)")


def extract_baseline(field: ControlField, window: int) -> ControlField:
    """Centered moving average of the field.

    The ends are extended by point reflection, which preserves linear trends.
    """
    _check_window(field.grid.n_steps, window)
    return ControlField(field.grid, _moving_average(np.asarray(field.values), window))


def field_spectrum(
    field: ControlField, window: int, breakpoints: Sequence[float] = ()
) -> FieldSpectrum:
    """Spectrum of ``field - baseline`` with a Hann taper.

    ``breakpoints`` are times where the baseline switches level; the
    residual is then split there, each piece is tapered separately and the
    powers are summed on the full-record frequency grid. This keeps
    oscillations on different plateaus from interfering through their
    relative phase. ``max_amplitude`` ignores samples within half a window
    of a breakpoint or of either end, where the moving average cannot
    follow the signal.
    """
    grid = field.grid
    n = grid.n_steps
    values = np.asarray(field.values)
    residual = values - extract_baseline(field, window).values
    freqs = np.fft.rfftfreq(n, grid.dt)
    t = grid.midpoints
    cuts = [0] + [int(np.searchsorted(t, b)) for b in sorted(breakpoints)] + [n]
    scale = max(1.0, float(np.max(np.abs(values))))
    if np.max(np.abs(residual)) <= 1e-12 * scale:
        zeros = np.zeros_like(freqs)
        return FieldSpectrum(freqs, zeros, None, 0.0, 1.0 / grid.duration, zeros, residual)

    power = np.zeros_like(freqs)
    amp2 = np.zeros_like(freqs)
    taper_sq = 0.0
    pieces = [(a, b) for a, b in zip(cuts[:-1], cuts[1:]) if b - a >= 8]
    for a, b in pieces:
        taper = np.hanning(b - a)
        spec = np.fft.rfft(residual[a:b] * taper, n)
        power += np.abs(spec) ** 2
        amp2 += (2 * np.abs(spec) / taper.sum()) ** 2
        taper_sq += np.sum(taper**2)
    amplitudes = np.sqrt(amp2 / len(pieces))

    keep = np.ones(n, dtype=bool)
    for c in cuts:
        keep[max(0, c - window // 2): c + window // 2 + 1] = False
    a_max = float(np.max(np.abs(residual[keep]))) if keep.any() else float(np.max(np.abs(residual)))
    peak = 1 + int(np.argmax(power[1:]))
    return FieldSpectrum(
        frequencies=freqs,
        amplitudes=amplitudes,
        dominant_frequency=float(freqs[peak]),
        max_amplitude=a_max,
        bin_width=1.0 / grid.duration,
        power=power,
        residual=residual,
        taper_power=taper_sq / sum(b - a for a, b in pieces),
    )


@dataclass
class SpeedupFit:
    tau: float
    beta_curve: list[tuple[int, float]]
    residuals: list[float]
    speedup_absent: bool = False


def sudden_switch_time_uniform(n_levels: int, gap: float) -> float:
    return (n_levels - 1) * math.pi / gap


def beta_of_n(n_levels: int, tau: float, gap: float) -> float:
    return 1.0 - (n_levels - 2) / (n_levels - 1) * tau * gap / math.pi


def fit_beta_tau(points: Sequence[tuple[int, float]], gap: float) -> SpeedupFit:
    """Least-squares ``tau`` in ``T_qsl(N) = (N-1)*pi/gap - (N-2)*tau``."""
    if not gap > 0:
        raise ParameterError("gap must be positive")
    ns = np.array([int(p[0]) for p in points])
    t = np.array([float(p[1]) for p in points])
    if np.any(ns < 2) or len(set(ns.tolist())) < 3:
        raise ParameterError("need points for at least 3 distinct N >= 2")
    ts = (ns - 1) * math.pi / gap
    x = (ns - 2).astype(float)
    tau = float(np.dot(x, ts - t) / np.dot(x, x))
    model = ts - x * tau
    fit = SpeedupFit(
        tau=tau,
        beta_curve=[(int(n), beta_of_n(int(n), tau, gap)) for n in ns],
        residuals=((t - model) / ts).tolist(),
        speedup_absent=tau < 0,
    )
    if fit.speedup_absent:
        warnings.warn(f"fitted tau={tau:g} < 0: no speed-up", RuntimeWarning, stacklevel=2)
    return fit


def gap_scaling_fit(points: Sequence[tuple[float, float]], delta_a: float) -> tuple[float, list[float]]:
    """Least-squares ``beta`` in ``T_qsl = beta * (pi/delta_a + pi/delta_b)``.

    Returns ``beta`` and relative residuals ``(T_qsl - model) / model``.
    """
    if len(points) < 3:
        raise ParameterError("need at least 3 points")
    db = np.array([p[0] for p in points], dtype=float)
    t = np.array([p[1] for p in points], dtype=float)
    if not (delta_a > 0 and np.all(db > 0) and np.all(t > 0)):
        raise ParameterError("gaps and times must be positive")
    ts = math.pi / delta_a + math.pi / db
    beta = float(np.dot(t, ts) / np.dot(ts, ts))
    model = beta * ts
    return beta, ((t - model) / model).tolist()


def linearity_check(points: Sequence[tuple[float, float]]) -> tuple[float, float, float]:
    """Ordinary least-squares line: ``(slope, intercept, r_squared)``."""
    if len(points) < 3:
        raise ParameterError("need at least 3 points")
    x = np.array([p[0] for p in points], dtype=float)
    y = np.array([p[1] for p in points], dtype=float)
    slope, intercept = np.polyfit(x, y, 1)
    ss_res = float(np.sum((y - (slope * x + intercept)) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return float(slope), float(intercept), r2

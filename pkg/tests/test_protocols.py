import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad
from scipy.stats import norm

from qsl_control.dynamics import ControlField, TimeGrid, basis_state, infidelity
from qsl_control.model import ParameterError, SystemSpec, build_hamiltonian
from qsl_control.protocols import (
    PROCESS_I,
    PROCESS_II,
    GuessConfig,
    ProcessSpec,
    apportion,
    crossing_positions,
    initial_guess,
    staircase,
    sudden_switch,
    sudden_switch_final_state,
    sudden_switch_time,
)


def diagonal_crossings(spec):
    """Solve H[j,j](lam) == H[j+1,j+1](lam) from two evaluations of the diagonal."""
    d0 = np.diag(build_hamiltonian(spec, 0.0)).real
    slope = np.diag(build_hamiltonian(spec, 1.0)).real - d0
    return [(d0[j + 1] - d0[j]) / (slope[j] - slope[j + 1]) for j in range(spec.n_levels - 1)]


def test_crossing_positions_examples():
    np.testing.assert_array_equal(crossing_positions(SystemSpec(3, (1, 1), 10)), [0, 10])
    np.testing.assert_array_equal(crossing_positions(SystemSpec(2, (1,), 10)), [0])
    spec = SystemSpec.uniform(5, 1.0, 7.0)
    np.testing.assert_allclose(crossing_positions(spec), [0, 7, 14, 21])
    np.testing.assert_allclose(crossing_positions(spec), diagonal_crossings(spec), atol=1e-12)


@given(st.integers(2, 9), st.floats(0.1, 100))
def test_crossings_evenly_spaced(n, eps0):
    pos = crossing_positions(SystemSpec.uniform(n, 1.0, eps0))
    assert np.all(np.diff(pos) > 0)
    np.testing.assert_allclose(np.diff(pos), eps0, rtol=1e-12)
    np.testing.assert_allclose(pos, diagonal_crossings(SystemSpec.uniform(n, 1.0, eps0)), atol=1e-9 * eps0 * n)


def test_process_validation():
    with pytest.raises(ParameterError):
        ProcessSpec(1, 1)
    with pytest.raises(ParameterError):
        staircase(SystemSpec(3, (1, 1), 10), ProcessSpec(0, 3))
    assert PROCESS_I.crossings == [0]
    assert PROCESS_II.crossings == [0, 1]
    assert ProcessSpec(4, 1).crossings == [3, 2, 1]


def test_sudden_switch_process_ii():
    spec = SystemSpec(3, (1, 1), 10)
    field, total = sudden_switch(spec, PROCESS_II)
    assert total == pytest.approx(2 * math.pi, rel=1e-15)
    m = field.grid.n_steps
    assert set(field.values[: m // 2]) == {0.0}
    assert set(field.values[m // 2 + 1:]) == {10.0}


def test_sudden_switch_two_level():
    spec = SystemSpec(2, (0.5,), 10)
    field, total = sudden_switch(spec, PROCESS_I)
    assert total == pytest.approx(math.pi / 0.5)
    assert np.all(field.values == 0)


def test_sudden_switch_six_levels():
    assert sudden_switch_time(SystemSpec.uniform(6, 1.0, 10), ProcessSpec(0, 5)) == pytest.approx(5 * math.pi)


def test_sudden_switch_unequal_gaps_apportioned():
    spec = SystemSpec(3, (1, 2), 10)
    field, total = sudden_switch(spec, PROCESS_II, TimeGrid(1.5 * math.pi, 301))
    assert total == pytest.approx(1.5 * math.pi)
    assert np.sum(field.values == 0) == 201
    assert np.sum(field.values == 10) == 100


def test_sudden_switch_grid_too_coarse():
    with pytest.raises(ParameterError, match="intervals"):
        sudden_switch(SystemSpec(3, (1, 1), 10), PROCESS_II, TimeGrid(2 * math.pi, 15))


@given(st.lists(st.floats(0.01, 10), min_size=1, max_size=8), st.integers(1, 5000))
def test_apportion_sums(weights, total):
    counts = apportion(weights, total)
    assert counts.sum() == total
    exact = total * np.asarray(weights) / sum(weights)
    assert np.all(np.abs(counts - exact) < 1)


@pytest.mark.parametrize("n", [3, 4, 6])
def test_sudden_switch_exact_at_large_separation(n):
    spec = SystemSpec.uniform(n, 1.0, 50.0)
    psi = sudden_switch_final_state(spec, ProcessSpec(0, n - 1))
    assert infidelity(psi, basis_state(n, n - 1)) < 1e-4


def test_sudden_switch_process_i_exact():
    # |1> is also coupled to |2>, so process I leaks more than process II
    spec = SystemSpec(3, (1, 1), 100.0)
    assert infidelity(sudden_switch_final_state(spec, PROCESS_I), basis_state(3, 0)) < 1e-4


def test_sudden_switch_degrades_gracefully():
    values = [
        infidelity(sudden_switch_final_state(SystemSpec(3, (1, 1), e), PROCESS_II), basis_state(3, 2))
        for e in (5, 10, 20, 50)
    ]
    assert all(a > b for a, b in zip(values, values[1:]))
    # leakage is second order in gap / eps0
    assert values[0] < 1.0 * (1 / 5) ** 2


def test_guess_no_modification_recovers_staircase():
    spec = SystemSpec(3, (1, 1), 10)
    grid = TimeGrid.for_system(spec, 2 * math.pi)
    guess = initial_guess(spec, PROCESS_II, grid, GuessConfig(smoothing_width=grid.dt, linear_slope_fraction=0))
    stairs, _ = sudden_switch(spec, PROCESS_II, grid)
    diff = np.abs(guess.values - stairs.values)
    # only samples within a few widths of the step edge differ
    assert np.sum(diff > 1e-6 * 10) <= 8
    assert np.max(diff[: grid.n_steps // 2 - 5]) < 1e-6


def test_guess_half_means_by_quadrature():
    spec = SystemSpec(3, (1, 1), 10)
    T = 0.9 * 2 * math.pi
    grid = TimeGrid.for_system(spec, T)
    cfg = GuessConfig(smoothing_width=0.02 * T, linear_slope_fraction=0.05)
    guess = initial_guess(spec, PROCESS_II, grid, cfg)
    sigma = cfg.smoothing_width

    def continuous(t):
        # gaussian-smoothed unit step at T/2 (far from both ends) plus tilt
        return 10 * norm.cdf((t - T / 2) / sigma) + 0.05 * 10 * (t / T - 0.5)

    first = quad(continuous, 0, T / 2, points=[T / 2])[0] / (T / 2)
    second = quad(continuous, T / 2, T, points=[T / 2])[0] / (T / 2)
    m = grid.n_steps
    assert np.mean(guess.values[: m // 2]) == pytest.approx(first, abs=10 * grid.dt)
    assert np.mean(guess.values[m // 2:]) == pytest.approx(second, abs=10 * grid.dt)
    assert abs(first - 0) < 0.5 and abs(second - 10) < 0.5


def test_guess_stretches_with_duration():
    spec = SystemSpec(3, (1, 2), 10)
    for ratio in (0.7, 1.3):
        T = ratio * sudden_switch_time(spec, PROCESS_II)
        grid = TimeGrid.for_system(spec, T)
        guess = initial_guess(spec, PROCESS_II, grid, GuessConfig(linear_slope_fraction=0))
        # segment durations pi and pi/2 keep their 2:1 proportion
        switch = grid.midpoints[np.argmin(np.abs(guess.values - 5))]
        assert switch == pytest.approx(2 / 3 * T, abs=2 * grid.dt)


def test_guess_invariant_under_refinement():
    spec = SystemSpec(3, (1, 1), 10)
    T = 2 * math.pi
    coarse = initial_guess(spec, PROCESS_II, TimeGrid(T, 600))
    fine = initial_guess(spec, PROCESS_II, TimeGrid(T, 1200))
    interp = np.interp(coarse.grid.midpoints, fine.grid.midpoints, fine.values)
    assert np.max(np.abs(interp - coarse.values)) < 10 * 10 * coarse.grid.dt


def test_guess_rejects_wide_smoothing():
    spec = SystemSpec(3, (1, 3), 10)
    grid = TimeGrid.for_system(spec, 4.0)
    with pytest.raises(ParameterError, match="segment"):
        initial_guess(spec, PROCESS_II, grid, GuessConfig(smoothing_width=1.2))


def test_guess_deterministic_and_kernels():
    spec = SystemSpec(3, (1, 1), 10)
    grid = TimeGrid.for_system(spec, 6.0)
    a = initial_guess(spec, PROCESS_II, grid)
    b = initial_guess(spec, PROCESS_II, grid)
    np.testing.assert_array_equal(a.values, b.values)
    box = initial_guess(spec, PROCESS_II, grid, GuessConfig(kernel="boxcar"))
    assert np.max(np.abs(box.values - a.values)) < 2.5
    assert np.mean(np.abs(box.values - a.values)) < 0.1

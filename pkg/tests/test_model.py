import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qsl_control.model import (
    ParameterError,
    SystemSpec,
    build_hamiltonian,
    coupling_derivative,
    eigen_spectrum,
)

pos = st.floats(0.05, 20.0)


def eq1_matrix(delta_a, delta_b, eps0, lam):
    return 0.5 * np.array(
        [[2 * lam, delta_a, 0], [delta_a, 0, delta_b], [0, delta_b, 2 * (lam - eps0)]]
    )


def charpoly_roots(h):
    """Eigenvalues of a 2x2 or 3x3 real symmetric matrix from its characteristic polynomial."""
    h = np.real(h)
    if h.shape == (2, 2):
        coeffs = [1, -np.trace(h), np.linalg.det(h)]
    else:
        minors = (h[0, 0] * h[1, 1] - h[0, 1] * h[1, 0]
                  + h[0, 0] * h[2, 2] - h[0, 2] * h[2, 0]
                  + h[1, 1] * h[2, 2] - h[1, 2] * h[2, 1])
        det = (h[0, 0] * (h[1, 1] * h[2, 2] - h[1, 2] * h[2, 1])
               - h[0, 1] * (h[1, 0] * h[2, 2] - h[1, 2] * h[2, 0])
               + h[0, 2] * (h[1, 0] * h[2, 1] - h[1, 1] * h[2, 0]))
        coeffs = [1, -np.trace(h), minors, -det]
    return np.sort(np.roots(coeffs).real)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(n_levels=1, gaps=(), spacing=1.0),
        dict(n_levels=3, gaps=(1.0,), spacing=1.0),
        dict(n_levels=3, gaps=(1.0, -1.0), spacing=1.0),
        dict(n_levels=3, gaps=(1.0, 1.0), spacing=0.0),
        dict(n_levels=2.5, gaps=(1.0,), spacing=1.0),
    ],
)
def test_invalid_spec(kwargs):
    with pytest.raises(ParameterError):
        SystemSpec(**kwargs)


def test_three_level_example():
    h = build_hamiltonian(SystemSpec(3, (1, 1), 10), 0.0)
    expected = np.array([[0, 0.5, 0], [0.5, 0, 0.5], [0, 0.5, -10]])
    np.testing.assert_array_equal(h, expected)


def test_two_level_is_sigma_x():
    delta = 1.7
    h = build_hamiltonian(SystemSpec(2, (delta,), 10), 0.0)
    np.testing.assert_array_equal(h, delta / 2 * np.array([[0, 1], [1, 0]]))


@given(pos, pos, pos, st.floats(-50, 50))
def test_three_level_matches_eq1(delta_a, delta_b, eps0, lam):
    spec = SystemSpec.three_level(delta_a, delta_b, eps0)
    np.testing.assert_allclose(build_hamiltonian(spec, lam), eq1_matrix(delta_a, delta_b, eps0, lam), rtol=0, atol=1e-12)


def test_five_level_tridiagonal_hermitian():
    h = build_hamiltonian(SystemSpec(5, (1, 2, 3, 4), 7), 3.3)
    assert np.allclose(h, h.conj().T)
    i, j = np.indices(h.shape)
    assert np.all(h[np.abs(i - j) > 1] == 0)


def test_even_diagonal_pattern():
    # |2n> -> lam - n eps0, |2n+1> -> n eps0
    h = build_hamiltonian(SystemSpec.uniform(6, 1.0, 4.0), 1.5)
    np.testing.assert_allclose(np.diag(h).real, [1.5, 0, -2.5, 4, -6.5, 8])


def test_hermitian_random_draws():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        n = int(rng.integers(2, 9))
        spec = SystemSpec(n, tuple(rng.uniform(0.01, 10, n - 1)), rng.uniform(0.1, 100))
        h = build_hamiltonian(spec, rng.uniform(-200, 200))
        scale = np.max(np.abs(h))
        assert np.max(np.abs(h - h.conj().T)) <= 1e-12 * scale


@pytest.mark.parametrize("n,diag", [(2, [1, 0]), (3, [1, 0, 1]), (4, [1, 0, 1, 0])])
def test_coupling_derivative(n, diag):
    spec = SystemSpec.uniform(n, 1.0, 10.0)
    np.testing.assert_array_equal(coupling_derivative(spec), np.diag(diag))


@given(st.integers(2, 7), st.floats(-30, 30), st.sampled_from([1e-3, 0.5, 2.0, -7.0]))
def test_coupling_derivative_is_exact_difference(n, lam, h):
    spec = SystemSpec.uniform(n, 0.7, 3.0)
    diff = (build_hamiltonian(spec, lam + h) - build_hamiltonian(spec, lam)) / h
    np.testing.assert_allclose(diff, coupling_derivative(spec), atol=1e-9)


def test_two_level_spectrum():
    np.testing.assert_allclose(eigen_spectrum(SystemSpec(2, (1.0,), 10), 0.0), [-0.5, 0.5], atol=1e-15)


def test_three_level_gap_at_crossing_a():
    spec = SystemSpec(3, (1, 1), 10)
    e = eigen_spectrum(spec, 0.0)
    np.testing.assert_allclose(e, charpoly_roots(build_hamiltonian(spec, 0.0)), atol=1e-9)
    # the pair taking part in crossing A sits near E=0; |2> lies near -eps0
    assert e[0] == pytest.approx(-10, abs=0.05)
    assert e[2] - e[1] == pytest.approx(1.0, abs=0.02)


def test_three_level_gap_at_crossing_b():
    spec = SystemSpec(3, (1, 1), 10)
    e = eigen_spectrum(spec, 10.0)
    assert e[1] - e[0] == pytest.approx(1.0, abs=0.02)


@settings(max_examples=200)
@given(st.sampled_from([2, 3]), st.lists(pos, min_size=2, max_size=2), pos, st.floats(-40, 40))
def test_spectrum_matches_charpoly(n, gaps, eps0, lam):
    spec = SystemSpec(n, tuple(gaps[: n - 1]), eps0)
    np.testing.assert_allclose(
        eigen_spectrum(spec, lam), charpoly_roots(build_hamiltonian(spec, lam)), atol=1e-9
    )

"""Compiled inner loops for piecewise-constant propagation and Krotov sweeps.

``h0`` is the real symmetric static Hamiltonian, ``p`` the diagonal of the
control operator, so ``H(lam) = h0 + lam * diag(p)``.
"""
import numpy as np
from numba import njit


@njit(cache=True)
def step_unitary(h0, p, lam, dt):
    n = h0.shape[0]
    h = h0.copy()
    for k in range(n):
        h[k, k] += lam * p[k]
    e, v = np.linalg.eigh(h)
    u = np.zeros((n, n), dtype=np.complex128)
    for m in range(n):
        ph = np.exp(-1j * e[m] * dt)
        for a in range(n):
            va = v[a, m] * ph
            for b in range(n):
                u[a, b] += va * v[b, m]
    return u


@njit(cache=True)
def unitaries(h0, p, values, dt):
    n = h0.shape[0]
    out = np.empty((values.shape[0], n, n), dtype=np.complex128)
    for j in range(values.shape[0]):
        out[j] = step_unitary(h0, p, values[j], dt)
    return out


@njit(cache=True)
def forward_states(us, psi0):
    m = us.shape[0]
    out = np.empty((m + 1, psi0.shape[0]), dtype=np.complex128)
    out[0] = psi0
    for j in range(m):
        out[j + 1] = us[j] @ out[j]
    return out


@njit(cache=True)
def backward_states(us, chi_t):
    m = us.shape[0]
    out = np.empty((m + 1, chi_t.shape[0]), dtype=np.complex128)
    out[m] = chi_t
    for j in range(m - 1, -1, -1):
        out[j] = us[j].conj().T @ out[j + 1]
    return out


@njit(cache=True)
def overlaps(chi, p, psi):
    """Im <chi_j| diag(p) |psi_j> for every row j."""
    out = np.empty(chi.shape[0])
    for j in range(chi.shape[0]):
        z = 0j
        for k in range(chi.shape[1]):
            z += np.conj(chi[j, k]) * p[k] * psi[j, k]
        out[j] = z.imag
    return out


@njit(cache=True)
def sweep(h0, p, values, dt, psi0, chi, shape, inv_mu):
    """Sequential update: each interval sees the already-updated state.

    Returns ``(new_values, new_unitaries, psi_T, bad_index)``; ``bad_index``
    is the first interval with a non-finite update, or -1.
    """
    m = values.shape[0]
    n = psi0.shape[0]
    new = values.copy()
    us = np.empty((m, n, n), dtype=np.complex128)
    psi = psi0.copy()
    for j in range(m):
        z = 0j
        for k in range(n):
            z += np.conj(chi[j, k]) * p[k] * psi[k]
        lam = values[j] + shape[j] * inv_mu * z.imag
        if not np.isfinite(lam):
            return new, us, psi, j
        new[j] = lam
        us[j] = step_unitary(h0, p, lam, dt)
        psi = us[j] @ psi
    return new, us, psi, -1

"""Spin-j matrices in the |j, m> basis, ordered m = j, j-1, ..., -j.

Spins are labelled by ``two_j`` (twice the spin) so half-integer values stay
exact integers.
"""

from functools import lru_cache

import numpy as np


def block_dim(two_j):
    return two_j + 1


def spin_labels(n_qubits):
    """All ``two_j`` values carried by ``n_qubits`` spin-1/2 particles, ascending."""
    if n_qubits < 1:
        raise ValueError(f"n_qubits must be >= 1, got {n_qubits}")
    return list(range(n_qubits % 2, n_qubits + 1, 2))


def magnetic_numbers(two_j):
    """m values (j, j-1, ..., -j) as floats."""
    return (two_j - 2 * np.arange(two_j + 1)) / 2.0


@lru_cache(maxsize=None)
def _ladder(two_j):
    j = two_j / 2.0
    m = magnetic_numbers(two_j)
    d = two_j + 1
    jp = np.zeros((d, d))
    # <j, m+1 | J+ | j, m>: row index of m+1 is one above that of m
    for col in range(1, d):
        jp[col - 1, col] = np.sqrt(j * (j + 1) - m[col] * (m[col] + 1))
    jz = np.diag(m)
    jp.flags.writeable = False
    jz.flags.writeable = False
    return jp, jz


def raising_operator(two_j):
    return _ladder(two_j)[0].astype(complex)


def ladder_operators(two_j):
    """Return ``(Jx, Jy, Jz)`` for spin ``two_j / 2`` as complex arrays."""
    if two_j < 0:
        raise ValueError(f"two_j must be >= 0, got {two_j}")
    jp, jz = _ladder(two_j)
    jm = jp.T
    jx = (jp + jm) / 2.0
    jy = (jp - jm) / 2.0j
    return jx.astype(complex), jy.astype(complex), jz.astype(complex)


@lru_cache(maxsize=None)
def _jy_eigh(two_j):
    _, jy, _ = ladder_operators(two_j)
    w, v = np.linalg.eigh(jy)
    w.flags.writeable = False
    v.flags.writeable = False
    return w, v


def wigner_small_d(two_j, theta):
    """exp(-i theta Jy), real up to rounding."""
    w, v = _jy_eigh(two_j)
    d = (v * np.exp(-1j * theta * w)) @ v.conj().T
    return d.real


def rotation_to_axis(two_j, theta, phi):
    """U = exp(-i phi Jz) exp(-i theta Jy).

    Column ``i`` of U is the eigenvector of ``n . J`` with eigenvalue
    ``magnetic_numbers(two_j)[i]`` where n = (sin t cos p, sin t sin p, cos t).
    """
    m = magnetic_numbers(two_j)
    phase = np.exp(-1j * phi * m)
    return phase[:, None] * wigner_small_d(two_j, theta)


def rotations_to_axes(two_j, thetas, phis):
    """Stack of ``rotation_to_axis`` for many directions, shape (D, d, d)."""
    thetas = np.asarray(thetas, dtype=float)
    phis = np.asarray(phis, dtype=float)
    w, v = _jy_eigh(two_j)
    m = magnetic_numbers(two_j)
    # d(theta) = V diag(exp(-i theta w)) V^dagger, batched over theta
    small_d = np.einsum("ak,nk,bk->nab", v, np.exp(-1j * np.outer(thetas, w)), v.conj()).real
    return np.exp(-1j * np.outer(phis, m))[:, :, None] * small_d

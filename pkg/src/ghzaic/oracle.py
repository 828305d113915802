"""Brute-force reference on the full 2^N space, for N <= 6.

Only used to cross-check the block machinery, so it favours obviousness over
speed: explicit Schur basis by Gram-Schmidt and lowering, explicit product
projectors for measurements.
"""

from dataclasses import dataclass
from functools import lru_cache
from itertools import permutations

import numpy as np

from .spin import spin_labels
from .states import PIState, multiplicities

MAX_QUBITS = 6


class UnsupportedSizeError(ValueError):
    pass


def _check(n):
    if n > MAX_QUBITS:
        raise UnsupportedSizeError(f"oracle supports at most {MAX_QUBITS} qubits, got {n}")


@dataclass(frozen=True, eq=False)
class DenseState:
    n_qubits: int
    rho: np.ndarray

    def validate(self, tol=1e-10):
        r = self.rho
        assert np.abs(r - r.conj().T).max() < 1e-12
        assert abs(np.trace(r).real - 1) < tol
        assert np.linalg.eigvalsh(r).min() > -tol
        return self


def _collective(n):
    """Dense Jz and J- for n qubits, |0> = spin up."""
    dim = 2**n
    idx = np.arange(dim)
    ones = np.array([bin(i).count("1") for i in idx])
    jz = np.diag((n - 2 * ones) / 2.0)
    jm = np.zeros((dim, dim))
    for q in range(n):
        bit = 1 << (n - 1 - q)
        src = idx[(idx & bit) == 0]
        jm[src | bit, src] = 1.0
    return jz, jm, ones


@lru_cache(maxsize=None)
def schur_basis(n):
    """{two_j: array (2^N, 2j+1, K_j)} with columns |j, m, alpha>, m = j..-j."""
    _check(n)
    _, jm, ones = _collective(n)
    dim = 2**n
    taken = np.zeros((dim, 0))
    basis = {}
    for tj in sorted(spin_labels(n), reverse=True):
        j = tj / 2
        r = (n - tj) // 2
        eig = np.eye(dim)[:, ones == r]
        # remove the parts already owned by higher spins
        proj = eig - taken @ (taken.T @ eig)
        u, s, _ = np.linalg.svd(proj, full_matrices=False)
        hw = u[:, s > 1e-8]
        vecs = np.zeros((dim, tj + 1, hw.shape[1]))
        vecs[:, 0, :] = hw
        for i in range(1, tj + 1):
            m = j - (i - 1)
            vecs[:, i, :] = jm @ vecs[:, i - 1, :] / np.sqrt(j * (j + 1) - m * (m - 1))
        basis[tj] = vecs
        taken = np.hstack([taken, vecs.reshape(dim, -1)])
    return basis


def embed(state):
    """Full-space operator sum_j P_j rho_j (x) 1/K_j."""
    n = state.n_qubits
    _check(n)
    basis = schur_basis(n)
    k = multiplicities(n)
    rho = np.zeros((2**n, 2**n), dtype=complex)
    for tj, p, b in zip(state.two_js, state.weights, state.blocks):
        if p == 0:
            continue
        vecs = basis[tj]
        for a in range(k[tj]):
            v = vecs[:, :, a]
            rho += p / k[tj] * v @ b @ v.T
    return DenseState(n, rho)


def read_back(dense):
    """Blockwise P_j rho_j recovered from a dense operator."""
    n = dense.n_qubits
    basis = schur_basis(n)
    weighted = []
    for tj in spin_labels(n):
        vecs = basis[tj]
        weighted.append(sum(vecs[:, :, a].T @ dense.rho @ vecs[:, :, a] for a in range(vecs.shape[2])))
    return PIState.from_weighted(n, weighted)


def single_qubit_eigvecs(setting):
    """Columns: +n and -n eigenvectors of n . sigma."""
    x, y, z = setting.vector
    sigma_n = np.array([[z, x - 1j * y], [x + 1j * y, -z]])
    w, v = np.linalg.eigh(sigma_n)
    return v[:, ::-1]


def brute_distribution(dense, setting):
    """p(k) with k the number of qubits found along +n."""
    n = dense.n_qubits
    _check(n)
    e = single_qubit_eigvecs(setting)
    proj = [np.outer(e[:, 0], e[:, 0].conj()), np.outer(e[:, 1], e[:, 1].conj())]
    p = np.zeros(n + 1)
    for s in range(2**n):
        bits = [(s >> (n - 1 - q)) & 1 for q in range(n)]
        op = np.array([[1.0]])
        for b in bits:
            op = np.kron(op, proj[b])
        p[n - sum(bits)] += np.einsum("ab,ba->", dense.rho, op).real
    return p


def permutation_unitary(perm):
    """V(pi) sending qubit q to position perm[q]."""
    n = len(perm)
    dim = 2**n
    v = np.zeros((dim, dim))
    for s in range(dim):
        bits = [(s >> (n - 1 - q)) & 1 for q in range(n)]
        out = [0] * n
        for q, b in enumerate(bits):
            out[perm[q]] = b
        t = int("".join(map(str, out)), 2)
        v[t, s] = 1.0
    return v


def max_permutation_commutator(dense):
    n = dense.n_qubits
    worst = 0.0
    for perm in permutations(range(n)):
        v = permutation_unitary(perm)
        worst = max(worst, np.abs(v @ dense.rho - dense.rho @ v).max())
    return worst


def check_settings(plan, count, rng):
    """The first ``count`` plan settings, topped up with random directions."""
    from .measurement import Setting

    chosen = list(plan.settings[:count])
    while len(chosen) < count:
        chosen.append(Setting.from_vector(rng.standard_normal(3)))
    return chosen


def oracle_check(n_qubits, samples=50, seed=0, settings_per_state=10, corrupt=False):
    """Largest |p_block(k) - p_brute(k)| over random states and settings."""
    from .measurement import generate_plan, outcome_distribution
    from .states import random_pi_state

    _check(n_qubits)
    rng = np.random.default_rng(seed)
    plan = generate_plan(n_qubits)
    settings = check_settings(plan, settings_per_state, rng)
    worst = 0.0
    for i in range(samples):
        state = random_pi_state(n_qubits, rng.integers(2**63))
        dense = embed(state)
        for st in settings:
            p_block = outcome_distribution(state, st)
            if corrupt:
                p_block = np.roll(p_block, 1)
            worst = max(worst, float(np.abs(p_block - brute_distribution(dense, st)).max()))
    return worst

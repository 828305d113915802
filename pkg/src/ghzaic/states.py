"""Permutationally invariant (PI) density operators in block form.

A PI state on N qubits is stored as one (2j+1)-dimensional block per spin
value together with the block weights P_j.  The multiplicity spaces are
implicit: every block acts as ``rho_j (x) 1/K_j`` on the full space.
"""

import json
from dataclasses import dataclass
from math import comb

import numpy as np

from .spin import block_dim, spin_labels

TOL = 1e-10


class InvalidStateError(ValueError):
    pass


def _hermitize(a):
    return 0.5 * (a + a.conj().T)


def _placeholder(d):
    return np.eye(d, dtype=complex) / d


@dataclass(frozen=True, eq=False)
class PIState:
    """Block-diagonal PI state.

    ``blocks[i]`` is the unit-trace block for spin ``two_js[i] / 2`` and
    ``weights[i]`` its probability.  Blocks are ordered by ascending spin, so
    the symmetric (top) block is last.
    """

    n_qubits: int
    two_js: tuple
    weights: np.ndarray
    blocks: tuple

    @classmethod
    def from_weighted(cls, n_qubits, weighted, placeholders=None):
        """Build from unnormalised blocks ``P_j rho_j`` (trace normalised here)."""
        two_js = tuple(spin_labels(n_qubits))
        if len(weighted) != len(two_js):
            raise InvalidStateError("wrong number of blocks")
        traces = np.array([np.trace(w).real for w in weighted])
        total = traces.sum()
        if not total > 0:
            raise InvalidStateError("state has zero trace")
        weights = np.clip(traces / total, 0.0, None)
        blocks = []
        for i, (tj, w) in enumerate(zip(two_js, weighted)):
            d = block_dim(tj)
            if w.shape != (d, d):
                raise InvalidStateError(f"block for two_j={tj} has shape {w.shape}")
            if traces[i] > 1e-14 * total:
                blocks.append(_hermitize(np.asarray(w, dtype=complex)) / traces[i])
            else:
                weights[i] = 0.0
                ph = None if placeholders is None else placeholders.get(tj)
                blocks.append(_placeholder(d) if ph is None else ph)
        weights = weights / weights.sum()
        return cls(n_qubits, two_js, weights, tuple(blocks))

    @property
    def top(self):
        return self.blocks[-1]

    def weighted_blocks(self):
        return [p * b for p, b in zip(self.weights, self.blocks)]

    def block(self, two_j):
        return self.blocks[self.two_js.index(two_j)]

    def weight(self, two_j):
        return self.weights[self.two_js.index(two_j)]

    def validate(self, tol=TOL):
        if tuple(spin_labels(self.n_qubits)) != tuple(self.two_js):
            raise InvalidStateError("spin labels do not match n_qubits")
        if np.any(self.weights < -tol) or abs(self.weights.sum() - 1) > tol:
            raise InvalidStateError(f"bad block weights {self.weights}")
        for tj, b in zip(self.two_js, self.blocks):
            if b.shape != (tj + 1, tj + 1):
                raise InvalidStateError(f"block two_j={tj} has shape {b.shape}")
            if np.abs(b - b.conj().T).max() > 1e-12:
                raise InvalidStateError(f"block two_j={tj} not Hermitian")
            if abs(np.trace(b).real - 1) > tol:
                raise InvalidStateError(f"block two_j={tj} trace {np.trace(b)}")
            if np.linalg.eigvalsh(b).min() < -tol:
                raise InvalidStateError(f"block two_j={tj} not PSD")
        return self

    def allclose(self, other, atol=1e-12):
        if self.n_qubits != other.n_qubits:
            return False
        return all(
            np.allclose(a, b, atol=atol, rtol=0)
            for a, b in zip(self.weighted_blocks(), other.weighted_blocks())
        )

    def purity(self):
        """Tr[rho^2] of the embedded operator, including the 1/K_j spreading."""
        k = multiplicities(self.n_qubits)
        return float(sum(
            p * p * np.vdot(b, b).real / k[tj]
            for tj, p, b in zip(self.two_js, self.weights, self.blocks)
        ))

    def to_dict(self):
        return {
            "nQubits": self.n_qubits,
            "blocks": [
                {
                    "twoJ": tj,
                    "weight": float(p),
                    "rho_real": b.real.tolist(),
                    "rho_imag": b.imag.tolist(),
                }
                for tj, p, b in zip(self.two_js, self.weights, self.blocks)
            ],
        }

    @classmethod
    def from_dict(cls, doc):
        n = int(doc["nQubits"])
        entries = sorted(doc["blocks"], key=lambda e: e["twoJ"])
        two_js = tuple(int(e["twoJ"]) for e in entries)
        if two_js != tuple(spin_labels(n)):
            raise InvalidStateError(f"blocks {two_js} do not match nQubits={n}")
        weights = np.array([float(e["weight"]) for e in entries])
        blocks = tuple(
            np.array(e["rho_real"], dtype=float) + 1j * np.array(e["rho_imag"], dtype=float)
            for e in entries
        )
        return cls(n, two_js, weights, blocks)

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class ThreeParamState:
    """Noisy GHZ state: population imbalance, phase shift and coherence."""

    n_qubits: int
    epsilon: float = 0.0
    phi: float = 0.0
    delta: float = 1.0

    def __post_init__(self):
        if self.n_qubits < 2:
            raise ValueError(f"n_qubits must be >= 2, got {self.n_qubits}")
        if not -1.0 <= self.epsilon <= 1.0:
            raise ValueError(f"epsilon={self.epsilon} outside [-1, 1]")
        if not -np.pi <= self.phi < np.pi:
            raise ValueError(f"phi={self.phi} outside [-pi, pi)")
        if not 0.0 <= self.delta <= 1.0:
            raise ValueError(f"delta={self.delta} outside [0, 1]")

    @property
    def params(self):
        return np.array([self.epsilon, self.phi, self.delta])

    def corner(self):
        """The 2x2 matrix on span{|0...0>, |1...1>}."""
        return corner_matrix(self.epsilon, self.phi, self.delta)

    def to_pi(self):
        n = self.n_qubits
        d = n + 1
        top = np.zeros((d, d), dtype=complex)
        c = self.corner()
        top[0, 0], top[0, -1] = c[0, 0], c[0, 1]
        top[-1, 0], top[-1, -1] = c[1, 0], c[1, 1]
        two_js = tuple(spin_labels(n))
        weights = np.zeros(len(two_js))
        weights[-1] = 1.0
        blocks = tuple(_placeholder(tj + 1) for tj in two_js[:-1]) + (top,)
        return PIState(n, two_js, weights, blocks)

    def to_dict(self):
        return {"nQubits": self.n_qubits, "epsilon": self.epsilon,
                "phi": self.phi, "delta": self.delta}


def corner_matrix(epsilon, phi, delta):
    off = 0.5 * delta * np.sqrt(1.0 - epsilon * epsilon) * np.exp(1j * phi)
    return np.array([[0.5 * (1 + epsilon), off], [np.conj(off), 0.5 * (1 - epsilon)]])


def wrap_phase(phi):
    """Map an angle onto [-pi, pi)."""
    return float((phi + np.pi) % (2 * np.pi) - np.pi)


def ghz_state(n_qubits):
    if n_qubits < 2:
        raise ValueError(f"GHZ state needs n_qubits >= 2, got {n_qubits}")
    return ThreeParamState(n_qubits, 0.0, 0.0, 1.0).to_pi()


def three_param_state(n_qubits, epsilon, phi, delta):
    return ThreeParamState(n_qubits, epsilon, phi, delta).to_pi()


def multiplicities(n_qubits):
    """K_j for every spin, keyed by ``two_j``."""
    if n_qubits < 1:
        raise ValueError(f"n_qubits must be >= 1, got {n_qubits}")
    out = {}
    for tj in spin_labels(n_qubits):
        r = (n_qubits - tj) // 2
        out[tj] = comb(n_qubits, r) - (comb(n_qubits, r - 1) if r >= 1 else 0)
    return out


def pi_param_count(n_qubits):
    """Free real parameters of a normalised block-diagonal PI state."""
    return sum((tj + 1) ** 2 for tj in spin_labels(n_qubits)) - 1


def maximally_mixed(n_qubits):
    """The PI part of 1/2^N: weights (2j+1) K_j / 2^N, identity blocks."""
    k = multiplicities(n_qubits)
    two_js = tuple(spin_labels(n_qubits))
    weights = np.array([(tj + 1) * k[tj] for tj in two_js], dtype=float) / 2.0**n_qubits
    return PIState(n_qubits, two_js, weights, tuple(_placeholder(tj + 1) for tj in two_js))


def random_pi_state(n_qubits, seed=None):
    """Flat-Dirichlet block weights and Hilbert-Schmidt (Ginibre) blocks."""
    if n_qubits < 2:
        raise ValueError(f"n_qubits must be >= 2, got {n_qubits}")
    rng = np.random.default_rng(seed)
    two_js = spin_labels(n_qubits)
    weights = rng.dirichlet(np.ones(len(two_js)))
    weighted = []
    for tj, p in zip(two_js, weights):
        d = tj + 1
        g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        b = g @ g.conj().T
        weighted.append(p * b / np.trace(b).real)
    return PIState.from_weighted(n_qubits, weighted)


def _complement_projector(d):
    q = np.eye(d, dtype=complex)
    q[0, 0] = q[-1, -1] = 0.0
    return q


def orthogonalize_to_3p(state):
    """Remove every component overlapping the three-parameter family.

    The top block is compressed to the complement of the two extreme Dicke
    states (``Q rho Q``), which zeroes the four corner entries and keeps the
    block positive.  If nothing survives, the maximally mixed state on that
    complement is returned.
    """
    n = state.n_qubits
    d = n + 1
    q = _complement_projector(d)
    weighted = state.weighted_blocks()
    weighted[-1] = q @ weighted[-1] @ q
    placeholders = {n: q / np.trace(q).real}
    if sum(np.trace(w).real for w in weighted) <= 1e-14:
        weighted = [np.zeros_like(w) for w in weighted]
        weighted[-1] = q.copy()
    return PIState.from_weighted(n, weighted, placeholders)


def mix_true_state(rho_3p, rho_pi, q):
    """(1 - q) rho_3p + q rho_pi, combined block by block."""
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"q={q} outside [0, 1]")
    a = rho_3p.to_pi() if isinstance(rho_3p, ThreeParamState) else rho_3p
    if a.n_qubits != rho_pi.n_qubits:
        raise ValueError(f"qubit mismatch: {a.n_qubits} vs {rho_pi.n_qubits}")
    if q == 0.0:
        return a
    if q == 1.0:
        return rho_pi
    weighted = [(1 - q) * x + q * y for x, y in zip(a.weighted_blocks(), rho_pi.weighted_blocks())]
    return PIState.from_weighted(a.n_qubits, weighted)

"""Collective single-qubit measurement settings, exact outcome statistics and
synthetic count data.

Every shot measures the same Bloch direction n on all N qubits.  The record of
a shot is the number k of qubits found along +n, so a setting's statistics
form a distribution over k = 0..N.  Both models fitted downstream are PI, and
for PI states the probability of a particular bit string is p(k) / C(N, k);
the binomial factors are model-independent and cancel in any likelihood
ratio, which is why only k is stored.  Data from non-PI sources would need the
full strings.
"""

import csv
import io
from dataclasses import dataclass, field
from functools import lru_cache
from math import comb

import numpy as np

from . import _kernels
from .spin import rotation_to_axis, rotations_to_axes, spin_labels

GOLDEN_CONJ = (np.sqrt(5.0) - 1.0) / 2.0
NEG_DUST = 1e-12


class InconsistentProbabilityError(RuntimeError):
    pass


@dataclass(frozen=True)
class Setting:
    theta: float
    phi: float

    @property
    def vector(self):
        st = np.sin(self.theta)
        return np.array([st * np.cos(self.phi), st * np.sin(self.phi), np.cos(self.theta)])

    @classmethod
    def from_vector(cls, n):
        n = np.asarray(n, dtype=float)
        n = n / np.linalg.norm(n)
        theta = float(np.arccos(np.clip(n[2], -1.0, 1.0)))
        phi = float(np.arctan2(n[1], n[0]) % (2 * np.pi))
        return cls(theta, phi)


Z_SETTING = Setting(0.0, 0.0)
X_SETTING = Setting(np.pi / 2, 0.0)
Y_SETTING = Setting(np.pi / 2, np.pi / 2)


def setting_count(n_qubits):
    """D_N = C(N + 2, N)."""
    return comb(n_qubits + 2, n_qubits)


@dataclass(frozen=True)
class MeasurementPlan:
    n_qubits: int
    settings: tuple

    def __len__(self):
        return len(self.settings)

    @property
    def thetas(self):
        return np.array([s.theta for s in self.settings])

    @property
    def phis(self):
        return np.array([s.phi for s in self.settings])


def fibonacci_directions(count):
    """Fibonacci lattice: z_i = 1 - 2(i + 1/2)/D, azimuth 2 pi i / golden ratio."""
    i = np.arange(count)
    z = 1.0 - 2.0 * (i + 0.5) / count
    theta = np.arccos(z)
    phi = (2.0 * np.pi * i * GOLDEN_CONJ) % (2.0 * np.pi)
    return theta, phi


def generate_plan(n_qubits):
    if n_qubits < 1:
        raise ValueError(f"n_qubits must be >= 1, got {n_qubits}")
    theta, phi = fibonacci_directions(setting_count(n_qubits))
    return MeasurementPlan(n_qubits, tuple(Setting(float(t), float(p)) for t, p in zip(theta, phi)))


@dataclass(frozen=True)
class BlockGeometry:
    """Rotated Dicke vectors of one block for every setting.

    ``vecs[:, s * d + i]`` is column i of U_j for setting s; it carries outcome
    ``k = (N + two_j) / 2 - i`` and flat bin ``s * (N + 1) + k``.
    """

    two_j: int
    vecs: np.ndarray
    bins: np.ndarray


@lru_cache(maxsize=64)
def plan_geometry(plan):
    n = plan.n_qubits
    out = []
    for tj in spin_labels(n):
        d = tj + 1
        u = rotations_to_axes(tj, plan.thetas, plan.phis)  # (D, d, d)
        vecs = np.ascontiguousarray(u.transpose(1, 0, 2).reshape(d, -1))
        k = (n + tj) // 2 - np.arange(d)
        bins = (np.arange(len(plan))[:, None] * (n + 1) + k[None, :]).ravel()
        out.append(BlockGeometry(tj, vecs, bins))
    return tuple(out)


def _clean(p):
    if p.min() < -NEG_DUST:
        raise InconsistentProbabilityError(f"negative outcome probability {p.min():.3e}")
    return np.clip(p, 0.0, None)


def outcome_distribution(state, setting):
    """p(k), k = 0..N, for one collective setting."""
    n = state.n_qubits
    p = np.zeros(n + 1)
    for tj, w, rho in zip(state.two_js, state.weights, state.blocks):
        if rho.shape != (tj + 1, tj + 1):
            raise ValueError(f"block two_j={tj} has shape {rho.shape}")
        if w == 0.0:
            continue
        u = rotation_to_axis(tj, setting.theta, setting.phi)
        diag = np.einsum("ai,ab,bi->i", u.conj(), rho, u).real
        lo = (n - tj) // 2
        p[lo:lo + tj + 1] += w * diag[::-1]
    return _clean(p)


def plan_distributions(state, plan):
    """Outcome distributions for every setting of ``plan``, shape (D, N + 1)."""
    if state.n_qubits != plan.n_qubits:
        raise ValueError(f"state has {state.n_qubits} qubits, plan {plan.n_qubits}")
    n = state.n_qubits
    k = _kernels.active
    flat = np.zeros(len(plan) * (n + 1))
    for geo, w, rho in zip(plan_geometry(plan), state.weights, state.blocks):
        if w == 0.0:
            continue
        vals = w * k.diag_expect(np.ascontiguousarray(rho, dtype=complex), geo.vecs)
        k.scatter_add(flat, geo.bins, vals)
    return _clean(flat.reshape(len(plan), n + 1))


def projected_povm(plan):
    """Blockwise effects: ``effects[s][k][two_j]`` is a (2j+1)-square matrix.

    Blocks that cannot produce outcome k get a zero matrix.
    """
    n = plan.n_qubits
    effects = [[{} for _ in range(n + 1)] for _ in plan.settings]
    for geo in plan_geometry(plan):
        d = geo.two_j + 1
        for s in range(len(plan)):
            for k in range(n + 1):
                effects[s][k][geo.two_j] = np.zeros((d, d), dtype=complex)
            for i in range(d):
                v = geo.vecs[:, s * d + i]
                k = (n + geo.two_j) // 2 - i
                effects[s][k][geo.two_j] = np.outer(v, v.conj())
    return effects


@dataclass(eq=False)
class CountsDataset:
    """Per-setting histograms of k; ``counts[s, k]`` shots of setting s saw k."""

    plan: MeasurementPlan
    counts: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        n = self.plan.n_qubits
        if self.counts.shape != (len(self.plan), n + 1):
            raise ValueError(f"counts shape {self.counts.shape} != ({len(self.plan)}, {n + 1})")
        if (self.counts < 0).any():
            raise ValueError("negative counts")

    @property
    def n_qubits(self):
        return self.plan.n_qubits

    @property
    def total_shots(self):
        return int(self.counts.sum())

    @property
    def shots_per_setting(self):
        return self.counts.sum(axis=1)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["setting_index", "theta", "phi", "k", "count"])
        for s, st in enumerate(self.plan.settings):
            for k in np.flatnonzero(self.counts[s]):
                w.writerow([s, format(st.theta, ".17g"), format(st.phi, ".17g"), int(k), int(self.counts[s, k])])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text, n_qubits):
        rows = list(csv.reader(io.StringIO(text)))
        if not rows:
            raise DatasetParseError("empty file", 1)
        if [c.strip() for c in rows[0]] != ["setting_index", "theta", "phi", "k", "count"]:
            raise DatasetParseError(f"unexpected header {rows[0]}", 1)
        angles = {}
        entries = []
        for lineno, row in enumerate(rows[1:], start=2):
            if not row:
                continue
            try:
                s, theta, phi, k, c = int(row[0]), float(row[1]), float(row[2]), int(row[3]), int(row[4])
            except (ValueError, IndexError) as exc:
                raise DatasetParseError(f"bad row {row}: {exc}", lineno) from None
            if not 0 <= k <= n_qubits or c < 0 or s < 0:
                raise DatasetParseError(f"value out of range in row {row}", lineno)
            if angles.setdefault(s, (theta, phi)) != (theta, phi):
                raise DatasetParseError(f"setting {s} has inconsistent angles", lineno)
            entries.append((s, k, c))
        if not entries:
            raise DatasetParseError("no data rows", len(rows))
        n_set = max(angles) + 1
        if sorted(angles) != list(range(n_set)):
            raise DatasetParseError("setting indices are not contiguous", len(rows))
        plan = MeasurementPlan(n_qubits, tuple(Setting(*angles[s]) for s in range(n_set)))
        counts = np.zeros((n_set, n_qubits + 1), dtype=np.int64)
        for s, k, c in entries:
            counts[s, k] += c
        return cls(plan, counts)


class DatasetParseError(ValueError):
    def __init__(self, message, line):
        super().__init__(f"line {line}: {message}")
        self.line = line


def shot_allocation(total_shots, n_settings):
    """floor(M / D) each, remainder handed out one by one from setting 0."""
    base, rem = divmod(total_shots, n_settings)
    shots = np.full(n_settings, base, dtype=np.int64)
    shots[:rem] += 1
    return shots


def sample_dataset(state, plan, total_shots, seed=None):
    if total_shots < len(plan):
        raise ValueError(f"total_shots={total_shots} < number of settings {len(plan)}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    probs = plan_distributions(state, plan)
    probs = probs / probs.sum(axis=1, keepdims=True)
    counts = rng.multinomial(shot_allocation(total_shots, len(plan)), probs)
    return CountsDataset(plan, counts)

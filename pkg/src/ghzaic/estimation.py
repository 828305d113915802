"""Maximum-likelihood fits of count data: the three-parameter noisy-GHZ model
and the full PI model.

Log-likelihoods use the natural log and the per-setting multinomial kernel
sum f log p (no multinomial coefficients).
"""

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from . import _kernels
from .measurement import plan_distributions, plan_geometry
from .states import PIState, ThreeParamState, maximally_mixed, wrap_phase

P_FLOOR = 1e-300

PI_MAX_ITER = 5000
PI_GAIN_TOL = 1e-10
KAPPA0 = 1.0
KAPPA_RESET_AFTER = 10
KAPPA_MIN = 1e-14
FROZEN_WEIGHT = 1e-12

SIMPLEX_TOL = 1e-7
GRID_SHAPE = (5, 8, 5)


@dataclass
class FitResult:
    model: str
    state: object
    log_likelihood: float
    iterations: int
    converged: bool
    param_count: int
    monotone: bool = True
    history: np.ndarray = field(default=None, repr=False)

    def to_dict(self):
        doc = {
            "model": self.model,
            "logLikelihood": self.log_likelihood,
            "iterations": self.iterations,
            "converged": self.converged,
            "paramCount": self.param_count,
            "state": self.state.to_dict(),
        }
        return doc

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, doc):
        st = doc["state"]
        state = PIState.from_dict(st) if "blocks" in st else ThreeParamState(
            st["nQubits"], st["epsilon"], st["phi"], st["delta"])
        return cls(doc["model"], state, doc["logLikelihood"], doc["iterations"],
                   doc["converged"], doc["paramCount"])


def log_likelihood(state, dataset):
    """sum over settings and k of f log p(k | setting).

    Zero-count bins contribute nothing; probabilities are floored at 1e-300.
    Returns -inf when a bin with counts lies outside the support of every
    block that carries weight (data impossible under the model).
    """
    if isinstance(state, ThreeParamState):
        state = state.to_pi()
    if state.n_qubits != dataset.n_qubits:
        raise ValueError(f"state has {state.n_qubits} qubits, data {dataset.n_qubits}")
    f = dataset.counts.ravel().astype(float)
    if not f.any():
        return 0.0
    p = plan_distributions(state, dataset.plan).ravel()
    obs = f > 0
    n = state.n_qubits
    reach = np.zeros(n + 1, dtype=bool)
    for tj, w in zip(state.two_js, state.weights):
        if w > 0:
            reach[(n - tj) // 2:(n + tj) // 2 + 1] = True
    if not reach[np.nonzero(dataset.counts)[1]].all():
        return -np.inf
    return float(f[obs] @ np.log(np.maximum(p[obs], P_FLOOR)))


class _ObservedBins:
    """Geometry restricted to bins with nonzero counts."""

    def __init__(self, dataset):
        flat = dataset.counts.ravel()
        observed = np.flatnonzero(flat)
        if observed.size == 0:
            raise ValueError("dataset has no shots")
        lookup = np.full(flat.size, -1, dtype=np.int64)
        lookup[observed] = np.arange(observed.size)
        self.f = flat[observed].astype(float)
        self.shots = self.f.sum()
        self.n_qubits = dataset.n_qubits
        self.blocks = []
        for geo in plan_geometry(dataset.plan):
            pos = lookup[geo.bins]
            cols = np.flatnonzero(pos >= 0)
            vecs = np.ascontiguousarray(geo.vecs[:, cols])
            self.blocks.append((geo.two_j, vecs, np.ascontiguousarray(vecs.conj().T), pos[cols]))
        top = plan_geometry(dataset.plan)[-1]
        cols = np.argsort(lookup[top.bins])[-observed.size:]  # top block reaches every k
        v0, vl = top.vecs[0, cols], top.vecs[-1, cols]
        self.corner_a = np.abs(v0) ** 2
        self.corner_b = np.abs(vl) ** 2
        self.corner_c = v0.conj() * vl


# ---------------------------------------------------------------------------
# three-parameter model


def _three_param_probs(obs, eps, phi, delta):
    eps, phi, delta = (np.asarray(x, dtype=float)[..., None] for x in (eps, phi, delta))
    coh = delta * np.sqrt(np.clip(1.0 - eps * eps, 0.0, None))
    return (0.5 * (1 + eps) * obs.corner_a + 0.5 * (1 - eps) * obs.corner_b
            + coh * (obs.corner_c * np.exp(1j * phi)).real)


def _three_param_loglik(obs, eps, phi, delta):
    p = _three_param_probs(obs, eps, phi, delta)
    return np.log(np.maximum(p, P_FLOOR)) @ obs.f


def _param_grid():
    ne, nphi, nd = GRID_SHAPE
    e, f, d = np.meshgrid(np.linspace(-1, 1, ne),
                          -np.pi + 2 * np.pi * np.arange(nphi) / nphi,
                          np.linspace(0, 1, nd), indexing="ij")
    return np.stack([e.ravel(), f.ravel(), d.ravel()], axis=1)


def fit_three_param(dataset, starts=3):
    """Grid search over (epsilon, phi, delta) followed by bounded Nelder-Mead."""
    obs = _ObservedBins(dataset)
    grid = _param_grid()
    grid_ll = _three_param_loglik(obs, grid[:, 0], grid[:, 1], grid[:, 2])
    order = np.argsort(-grid_ll, kind="stable")[:starts]

    def negll(x):
        return -float(_three_param_loglik(obs, x[0], x[1], x[2]))

    step = np.array([0.25, np.pi / 8, 0.125])
    best = None
    total_iter = 0
    for i in order:
        x0 = grid[i]
        simplex = np.vstack([x0] + [x0 + np.where(np.arange(3) == a, step, 0.0) for a in range(3)])
        simplex[:, 0] = np.clip(simplex[:, 0], -1, 1)
        simplex[:, 2] = np.clip(simplex[:, 2], 0, 1)
        # a clipped vertex can coincide with x0; push it inwards instead
        for a in (0, 2):
            if simplex[a + 1, a] == x0[a]:
                simplex[a + 1, a] = x0[a] - step[a]
        res = minimize(negll, x0, method="Nelder-Mead",
                       bounds=[(-1, 1), (-np.inf, np.inf), (0, 1)],
                       options={"initial_simplex": simplex, "xatol": SIMPLEX_TOL / 10,
                                "fatol": 1e-10, "maxfev": 4000})
        total_iter += res.nit
        fs = res.final_simplex[0]
        diam = max(np.abs(a - b).max() for a in fs for b in fs)
        cand = (-res.fun, res.x, diam < SIMPLEX_TOL)
        if best is None or cand[0] > best[0]:
            best = cand
    ll, x, conv = best
    if ll < grid_ll[order[0]]:
        ll, x, conv = float(grid_ll[order[0]]), grid[order[0]], False
    state = ThreeParamState(dataset.n_qubits, float(np.clip(x[0], -1, 1)), wrap_phase(x[1]),
                            float(np.clip(x[2], 0, 1)))
    ll = float(_three_param_loglik(obs, state.epsilon, state.phi, state.delta))
    return FitResult("3p", state, ll, total_iter, bool(conv), 3)


# ---------------------------------------------------------------------------
# PI model


def _pi_probs(obs, sigma, kern):
    p = np.zeros(obs.f.size)
    for (tj, vecs, vecs_h, pos), s in zip(obs.blocks, sigma):
        if s is None:
            continue
        kern.scatter_add(p, pos, kern.diag_expect(s, vecs))
    return p


def _r_operator(obs, p, kern):
    ratio = obs.f / np.maximum(p, P_FLOOR) / obs.shots
    return [kern.weighted_gram(vecs, ratio[pos], vecs_h) for _, vecs, vecs_h, pos in obs.blocks]


def fit_pi(dataset, initial=None, max_iter=PI_MAX_ITER, gain_tol=PI_GAIN_TOL, kernels=None):
    """Maximum likelihood over all PI states by a diluted R rho R iteration.

    Each step maps the block-diagonal state sigma (trace one over all blocks)
    to T sigma T / Tr[T sigma T] with T = (1 + kappa R) / (1 + kappa) and
    R = sum f / (S p) E over observed bins.  A step that lowers the likelihood
    is retried with kappa halved; kappa returns to 1 after ten accepted steps
    in a row.  Blocks whose weight drops below 1e-12 are frozen at zero.
    Starts from the maximally mixed PI state unless ``initial`` is given.

    ``history`` on the result holds the log-likelihood after every accepted
    step.
    """
    kern = kernels or _kernels.active
    obs = _ObservedBins(dataset)
    n = dataset.n_qubits
    start = initial if initial is not None else maximally_mixed(n)
    if start.n_qubits != n:
        raise ValueError("initial state has the wrong number of qubits")
    weighted = [np.ascontiguousarray(w, dtype=complex) for w in start.weighted_blocks()]
    alive = np.array([np.trace(w).real >= FROZEN_WEIGHT for w in weighted])
    weighted = [w if a else np.zeros_like(w) for w, a in zip(weighted, alive)]
    total = sum(np.trace(w).real for w in weighted)
    weighted = [w / total for w in weighted]
    wrap = kern.wrap_list
    sig, alive, ll, it, converged, _, history = kern.pi_fixed_point(
        wrap(weighted), alive,
        wrap([b[1] for b in obs.blocks]), wrap([b[2] for b in obs.blocks]),
        wrap([b[3] for b in obs.blocks]), obs.f,
        max_iter, gain_tol, KAPPA0, KAPPA_RESET_AFTER, KAPPA_MIN, FROZEN_WEIGHT, P_FLOOR)
    history = np.asarray(history)
    monotone = bool(np.all(np.diff(history) >= 0))
    weighted = [np.asarray(s) if a else np.zeros_like(np.asarray(s)) for s, a in zip(sig, alive)]
    state = PIState.from_weighted(n, weighted)
    return FitResult("pi", state, float(ll), int(it), bool(converged), _pi_param_count(n),
                     monotone, history)


def _labels(n):
    return list(range(n % 2, n + 1, 2))


def _pi_param_count(n):
    return sum((tj + 1) ** 2 for tj in _labels(n)) - 1


def stationarity(state, dataset):
    """||R rho - rho R||_F / ||rho||_F over the block-diagonal operator."""
    obs = _ObservedBins(dataset)
    kern = _kernels.numpy_kernels
    sigma = [np.ascontiguousarray(w, dtype=complex) for w in state.weighted_blocks()]
    p = _pi_probs(obs, sigma, kern)
    num = den = 0.0
    for s, r in zip(sigma, _r_operator(obs, p, kern)):
        num += np.linalg.norm(r @ s - s @ r) ** 2
        den += np.linalg.norm(s) ** 2
    return float(np.sqrt(num / den))

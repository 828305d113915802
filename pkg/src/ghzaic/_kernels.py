"""Hot inner kernels with a numba path and a pure-numpy path.

Set ``GHZAIC_DISABLE_NUMBA=1`` to force the numpy implementations (also used
when numba is not importable).  Both paths stay importable as
``numpy_kernels`` / ``numba_kernels`` so they can be benchmarked side by side.

Layout convention: ``vecs`` is a (d, C) complex array whose columns are the
rotated Dicke vectors of one spin block for every (setting, m) pair, and
``vecs_h`` its conjugate transpose stored C-contiguous.  ``pos`` maps each
column to an observed bin.
"""

import os
from types import SimpleNamespace

import numpy as np


def _np_diag_expect(rho, vecs):
    """Re(v_c^dagger rho v_c) for every column c."""
    return np.einsum("ac,ac->c", vecs.conj(), rho @ vecs).real


def _np_weighted_gram(vecs, w, vecs_h):
    """sum_c w_c v_c v_c^dagger."""
    return (vecs * w) @ vecs_h


def _np_scatter_add(out, idx, vals):
    out += np.bincount(idx, weights=vals, minlength=out.shape[0])
    return out


def _np_loglik(counts, probs, floor):
    return float(counts @ np.log(np.maximum(probs, floor)))


def _np_probs(sig, alive, vecs, pos, nobs):
    p = np.zeros(nobs)
    for b in range(len(sig)):
        if alive[b]:
            _np_scatter_add(p, pos[b], _np_diag_expect(sig[b], vecs[b]))
    return p


def _np_pi_fixed_point(sig, alive, vecs, vecs_h, pos, f, max_iter, gain_tol,
                       kappa0, reset_after, kappa_min, frozen, floor):
    """Diluted R rho R iteration on block-diagonal ``sig`` (trace one overall).

    Returns (sig, alive, loglik, iterations, converged, monotone, history).
    """
    nb = len(sig)
    shots = f.sum()
    nobs = f.shape[0]
    sig = [s.copy() for s in sig]
    alive = alive.copy()
    p = _np_probs(sig, alive, vecs, pos, nobs)
    ll = _np_loglik(f, p, floor)
    history = np.empty(max_iter + 1)
    history[0] = ll
    nhist = 1
    kappa, streak = kappa0, 0
    monotone, converged = True, False
    ratio = f / np.maximum(p, floor) / shots
    r_ops = [_np_weighted_gram(vecs[b], ratio[pos[b]], vecs_h[b]) if alive[b] else None
             for b in range(nb)]
    it = 0
    while it < max_iter:
        it += 1
        trial = []
        for b in range(nb):
            if not alive[b]:
                trial.append(sig[b])
                continue
            t = kappa * r_ops[b]
            t[np.diag_indices_from(t)] += 1.0
            t /= 1.0 + kappa
            trial.append(t @ sig[b] @ t.conj().T)
        traces = np.array([np.trace(trial[b]).real if alive[b] else 0.0 for b in range(nb)])
        total = traces.sum()
        new_alive = alive & (traces / total >= frozen)
        total = traces[new_alive].sum()
        for b in range(nb):
            trial[b] = trial[b] / total if new_alive[b] else np.zeros_like(trial[b])
        p_new = _np_probs(trial, new_alive, vecs, pos, nobs)
        ll_new = _np_loglik(f, p_new, floor)
        if ll_new >= ll:
            gain = ll_new - ll
            sig, alive, p, ll = trial, new_alive, p_new, ll_new
            history[nhist] = ll
            nhist += 1
            if gain < gain_tol:
                converged = True
                break
            streak += 1
            if streak >= reset_after:
                kappa, streak = kappa0, 0
            ratio = f / np.maximum(p, floor) / shots
            r_ops = [_np_weighted_gram(vecs[b], ratio[pos[b]], vecs_h[b]) if alive[b] else None
                     for b in range(nb)]
        else:
            kappa /= 2.0
            streak = 0
            if kappa < kappa_min:
                converged = True
                break
    return sig, alive, ll, it, converged, monotone, history[:nhist]


numpy_kernels = SimpleNamespace(
    diag_expect=_np_diag_expect,
    weighted_gram=_np_weighted_gram,
    scatter_add=_np_scatter_add,
    loglik=_np_loglik,
    pi_fixed_point=_np_pi_fixed_point,
    wrap_list=list,
    name="numpy",
)

try:
    from numba import njit
    from numba.typed import List as _TypedList

    @njit(cache=True)
    def _nb_diag_expect(rho, vecs):
        prod = np.dot(rho, vecs)
        d, ncol = vecs.shape
        out = np.empty(ncol)
        for c in range(ncol):
            acc = 0.0
            for a in range(d):
                v = vecs[a, c]
                s = prod[a, c]
                acc += v.real * s.real + v.imag * s.imag
            out[c] = acc
        return out

    @njit(cache=True)
    def _nb_weighted_gram(vecs, w, vecs_h):
        d, ncol = vecs.shape
        scaled = np.empty((d, ncol), dtype=np.complex128)
        for a in range(d):
            for c in range(ncol):
                scaled[a, c] = vecs[a, c] * w[c]
        return np.dot(scaled, vecs_h)

    @njit(cache=True)
    def _nb_scatter_add(out, idx, vals):
        for i in range(idx.shape[0]):
            out[idx[i]] += vals[i]
        return out

    @njit(cache=True)
    def _nb_loglik(counts, probs, floor):
        acc = 0.0
        for i in range(counts.shape[0]):
            p = probs[i]
            if p < floor:
                p = floor
            acc += counts[i] * np.log(p)
        return acc

    @njit(cache=True)
    def _nb_probs(sig, alive, vecs, pos, nobs):
        p = np.zeros(nobs)
        for b in range(len(sig)):
            if alive[b]:
                _nb_scatter_add(p, pos[b], _nb_diag_expect(sig[b], vecs[b]))
        return p

    @njit(cache=True)
    def _nb_ratio(f, p, floor, shots):
        out = np.empty(f.shape[0])
        for i in range(f.shape[0]):
            out[i] = f[i] / max(p[i], floor) / shots
        return out

    @njit(cache=True)
    def _nb_pi_fixed_point(sig, alive, vecs, vecs_h, pos, f, max_iter, gain_tol,
                           kappa0, reset_after, kappa_min, frozen, floor):
        nb = len(sig)
        shots = f.sum()
        nobs = f.shape[0]
        cur = _TypedList()
        for b in range(nb):
            cur.append(sig[b].copy())
        alive = alive.copy()
        p = _nb_probs(cur, alive, vecs, pos, nobs)
        ll = _nb_loglik(f, p, floor)
        history = np.empty(max_iter + 1)
        history[0] = ll
        nhist = 1
        kappa = kappa0
        streak = 0
        monotone = True
        converged = False
        ratio = _nb_ratio(f, p, floor, shots)
        r_ops = _TypedList()
        for b in range(nb):
            r_ops.append(_nb_weighted_gram(vecs[b], ratio[pos[b]], vecs_h[b]))
        it = 0
        while it < max_iter:
            it += 1
            trial = _TypedList()
            traces = np.zeros(nb)
            for b in range(nb):
                if not alive[b]:
                    trial.append(cur[b])
                    continue
                d = cur[b].shape[0]
                t = kappa * r_ops[b]
                for a in range(d):
                    t[a, a] += 1.0
                t /= 1.0 + kappa
                nxt = np.dot(np.dot(t, cur[b]), np.ascontiguousarray(np.conj(t.T)))
                trial.append(nxt)
                for a in range(d):
                    traces[b] += nxt[a, a].real
            total = traces.sum()
            new_alive = alive.copy()
            for b in range(nb):
                if alive[b] and traces[b] / total < frozen:
                    new_alive[b] = False
            total = 0.0
            for b in range(nb):
                if new_alive[b]:
                    total += traces[b]
            for b in range(nb):
                if new_alive[b]:
                    trial[b] = trial[b] / total
                else:
                    trial[b] = np.zeros_like(trial[b])
            p_new = _nb_probs(trial, new_alive, vecs, pos, nobs)
            ll_new = _nb_loglik(f, p_new, floor)
            if ll_new >= ll:
                gain = ll_new - ll
                cur = trial
                alive = new_alive
                p = p_new
                ll = ll_new
                history[nhist] = ll
                nhist += 1
                if gain < gain_tol:
                    converged = True
                    break
                streak += 1
                if streak >= reset_after:
                    kappa = kappa0
                    streak = 0
                ratio = _nb_ratio(f, p, floor, shots)
                for b in range(nb):
                    if alive[b]:
                        r_ops[b] = _nb_weighted_gram(vecs[b], ratio[pos[b]], vecs_h[b])
            else:
                kappa /= 2.0
                streak = 0
                if kappa < kappa_min:
                    converged = True
                    break
        return cur, alive, ll, it, converged, monotone, history[:nhist]

    def _typed(seq):
        out = _TypedList()
        for x in seq:
            out.append(x)
        return out

    numba_kernels = SimpleNamespace(
        diag_expect=_nb_diag_expect,
        weighted_gram=_nb_weighted_gram,
        scatter_add=_nb_scatter_add,
        loglik=_nb_loglik,
        pi_fixed_point=_nb_pi_fixed_point,
        wrap_list=_typed,
        name="numba",
    )
    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - depends on environment
    numba_kernels = None
    NUMBA_AVAILABLE = False


def _env_disabled():
    return os.environ.get("GHZAIC_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes"}


USE_NUMBA = NUMBA_AVAILABLE and not _env_disabled()
active = numba_kernels if USE_NUMBA else numpy_kernels

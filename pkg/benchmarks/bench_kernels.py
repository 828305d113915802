"""Compare the numba and pure-numpy kernel paths.

    python benchmarks/bench_kernels.py [--qubits 5 10 15 25] [--iters 300]

Times a fixed number of PI fixed-point iterations and a batch of outcome
distributions per backend, after one warm-up call (numba compile time is
reported separately).
"""

import argparse
import time

import numpy as np

from ghzaic import _kernels
from ghzaic.estimation import fit_pi
from ghzaic.measurement import generate_plan, plan_geometry, sample_dataset
from ghzaic.states import ThreeParamState, mix_true_state, orthogonalize_to_3p, random_pi_state


def _dataset(n, seed=0):
    plan = generate_plan(n)
    state = mix_true_state(ThreeParamState(n), orthogonalize_to_3p(random_pi_state(n, seed)), 0.02)
    return state, plan, sample_dataset(state, plan, 50 * len(plan), seed)


def _time(fn, repeat=3):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench(n, iters):
    state, plan, ds = _dataset(n)
    geo = plan_geometry(plan)
    rows = []
    for kern in (_kernels.numpy_kernels, _kernels.numba_kernels):
        if kern is None:
            continue
        t0 = time.perf_counter()
        fit_pi(ds, max_iter=2, kernels=kern)
        warm = time.perf_counter() - t0
        t_fit = _time(lambda: fit_pi(ds, max_iter=iters, gain_tol=0.0, kernels=kern))

        def probs():
            for g, w, b in zip(geo, state.weights, state.blocks):
                kern.diag_expect(np.ascontiguousarray(b), g.vecs)

        t_probs = _time(probs)
        rows.append((kern.name, warm, 1e6 * t_fit / iters, 1e6 * t_probs))
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--qubits", type=int, nargs="+", default=[5, 10, 15, 25])
    ap.add_argument("--iters", type=int, default=300)
    args = ap.parse_args()
    print(f"numba available: {_kernels.NUMBA_AVAILABLE}; active backend: {_kernels.active.name}")
    print(f"{'N':>3} {'backend':>8} {'warmup s':>9} {'us/iter':>10} {'probs us':>10} {'speedup':>8}")
    for n in args.qubits:
        rows = bench(n, args.iters)
        base = rows[0][2]
        for name, warm, per_it, probs in rows:
            print(f"{n:>3} {name:>8} {warm:>9.2f} {per_it:>10.1f} {probs:>10.1f} {base / per_it:>7.2f}x")


if __name__ == "__main__":
    main()

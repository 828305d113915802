"""AIC comparison of the three-parameter and PI models, and the sweeps over
measurement budget M, qubit number N and perturbation strength q.

Sign convention: delta AIC = AIC(3p) - AIC(PI), so negative values favour the
three-parameter model.
"""

import csv
import io
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .estimation import fit_pi, fit_three_param
from .measurement import generate_plan, sample_dataset, setting_count
from .states import ThreeParamState, mix_true_state, orthogonalize_to_3p, pi_param_count, random_pi_state

log = logging.getLogger(__name__)

K_3P = 3
M_CEILING = 2**22

# purpose tags for seed derivation
TAG_PERTURBATION = 1
TAG_SAMPLE = 2

SIGN_CONVENTION = "delta_aic = AIC_3P - AIC_PI; negative favours the 3-parameter model"


def aic(log_likelihood, param_count):
    if param_count < 0:
        raise ValueError(f"param_count must be >= 0, got {param_count}")
    return -2.0 * log_likelihood + 2.0 * param_count


def derive_seed(base_seed, *keys):
    """64-bit stream seed from the base seed and integer keys.

    Uses numpy's SeedSequence with ``keys`` as spawn key, so streams for
    different (repetition, purpose, M) never collide and adding grid points
    leaves existing streams untouched.
    """
    ss = np.random.SeedSequence(int(base_seed), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass
class AicReport:
    aic_3p: float
    aic_pi: float
    delta_aic: float
    k_pi: int
    shots: int
    ll_3p: float
    ll_pi: float
    k_3p: int = K_3P
    fit_3p: object = field(default=None, repr=False)
    fit_pi: object = field(default=None, repr=False)


def delta_aic(dataset):
    f3 = fit_three_param(dataset)
    fp = fit_pi(dataset)
    a3, ap = aic(f3.log_likelihood, K_3P), aic(fp.log_likelihood, fp.param_count)
    return AicReport(a3, ap, a3 - ap, fp.param_count, dataset.total_shots,
                     f3.log_likelihood, fp.log_likelihood, fit_3p=f3, fit_pi=fp)


@dataclass(frozen=True)
class ExperimentSpec:
    """Everything that defines the true state family of a sweep."""

    n_qubits: int
    q: float
    epsilon: float = 0.0
    phi: float = 0.0
    delta: float = 1.0
    base_seed: int = 0
    fixed_perturbation: bool = False

    def true_state(self, rep):
        base = ThreeParamState(self.n_qubits, self.epsilon, self.phi, self.delta)
        if self.q == 0.0:
            return base.to_pi(), None
        prep = 0 if self.fixed_perturbation else rep
        seed = derive_seed(self.base_seed, prep, TAG_PERTURBATION)
        pert = orthogonalize_to_3p(random_pi_state(self.n_qubits, seed))
        return mix_true_state(base, pert, self.q), seed


@dataclass
class RepRecord:
    n_qubits: int
    q: float
    shots: int
    rep: int
    delta_aic: float
    seed: int
    ll_3p: float = float("nan")
    ll_pi: float = float("nan")
    pi_iterations: int = 0
    pi_converged: bool = True
    pi_monotone: bool = True


def run_item(spec, rep, shots):
    """One repetition at one budget: sample, fit both models, compare."""
    state, _ = spec.true_state(rep)
    plan = generate_plan(spec.n_qubits)
    seed = derive_seed(spec.base_seed, rep, TAG_SAMPLE, shots)
    ds = sample_dataset(state, plan, shots, seed)
    r = delta_aic(ds)
    return RepRecord(spec.n_qubits, spec.q, shots, rep, r.delta_aic, seed, r.ll_3p, r.ll_pi,
                     r.fit_pi.iterations, r.fit_pi.converged, r.fit_pi.monotone)


def _run_item_args(args):
    return run_item(*args)


def run_items(items, workers=1, progress=None):
    """Evaluate (spec, rep, shots) items; output order follows input order."""
    items = list(items)
    if workers <= 1:
        out = []
        for i, it in enumerate(items):
            out.append(run_item(*it))
            if progress:
                progress(i + 1, len(items))
        return out
    with ProcessPoolExecutor(max_workers=workers) as pool:
        out = []
        for i, rec in enumerate(pool.map(_run_item_args, items, chunksize=1)):
            out.append(rec)
            if progress:
                progress(i + 1, len(items))
        return out


def crossing_point(ms, means):
    """M where the mean curve first goes from negative to positive.

    Linear interpolation between the bracketing grid points; None when no
    such sign change exists.
    """
    ms = np.asarray(ms, dtype=float)
    means = np.asarray(means, dtype=float)
    for i in range(1, len(ms)):
        if means[i - 1] < 0 and means[i] > 0:
            m0, m1, y0, y1 = ms[i - 1], ms[i], means[i - 1], means[i]
            return float(m0 + (m1 - m0) * (-y0) / (y1 - y0))
    return None


@dataclass
class SweepResult:
    n_qubits: int
    q: float
    records: list
    config: dict = field(default_factory=dict)
    censored: bool = False

    def grid(self):
        """[(M, mean, std, repetitions)], std is the sample std (0 for one rep)."""
        ms = sorted({r.shots for r in self.records})
        out = []
        for m in ms:
            vals = np.array([r.delta_aic for r in self.records if r.shots == m])
            std = float(vals.std(ddof=1)) if vals.size > 1 else 0.0
            out.append((m, float(vals.mean()), std, int(vals.size)))
        return out

    @property
    def crossing_m(self):
        g = self.grid()
        return crossing_point([x[0] for x in g], [x[1] for x in g])

    def subset(self, reps):
        reps = set(reps)
        return SweepResult(self.n_qubits, self.q, [r for r in self.records if r.rep in reps],
                           dict(self.config), self.censored)

    def records_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["N", "q", "M", "rep", "delta_aic", "seed"])
        for r in self.records:
            w.writerow([r.n_qubits, repr(r.q), r.shots, r.rep, repr(r.delta_aic), r.seed])
        return buf.getvalue()

    @staticmethod
    def parse_records_csv(text):
        rows = list(csv.DictReader(io.StringIO(text)))
        return [RepRecord(int(r["N"]), float(r["q"]), int(r["M"]), int(r["rep"]),
                          float(r["delta_aic"]), int(r["seed"])) for r in rows]

    def summary(self):
        nest = [r.ll_pi - r.ll_3p for r in self.records]
        return {
            "convention": SIGN_CONVENTION,
            "N": self.n_qubits,
            "q": self.q,
            "kPI": pi_param_count(self.n_qubits),
            "k3P": K_3P,
            "grid": [{"M": m, "mean": mu, "std": sd, "repetitions": n} for m, mu, sd, n in self.grid()],
            "crossingM": self.crossing_m,
            "censored": self.censored,
            "minLikelihoodGap": float(min(nest)) if nest else None,
            "nonMonotoneFits": int(sum(not r.pi_monotone for r in self.records)),
            "unconvergedFits": int(sum(not r.pi_converged for r in self.records)),
            "config": self.config,
        }

    def summary_json(self, **kw):
        return json.dumps(self.summary(), **kw)


def _check_grid(m_grid, n_qubits):
    m_grid = [int(m) for m in m_grid]
    if not m_grid:
        raise ValueError("empty M grid")
    if any(b <= a for a, b in zip(m_grid, m_grid[1:])):
        raise ValueError(f"M grid must be strictly ascending: {m_grid}")
    if m_grid[0] < setting_count(n_qubits):
        raise ValueError(f"M grid starts below D_N={setting_count(n_qubits)}")
    return m_grid


def sweep(n_qubits, q, m_grid, repetitions, base_seed=0, workers=1, progress=None, **state_kw):
    """Mean and spread of delta AIC over repetitions at every M in ``m_grid``."""
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"q={q} outside [0, 1]")
    m_grid = _check_grid(m_grid, n_qubits)
    spec = ExperimentSpec(n_qubits, q, base_seed=base_seed, **state_kw)
    items = [(spec, rep, m) for m in m_grid for rep in range(repetitions)]
    records = run_items(items, workers, progress)
    config = dict(asdict(spec), mGrid=m_grid, repetitions=repetitions)
    return SweepResult(n_qubits, q, records, config)


def auto_sweep(n_qubits, q, repetitions, base_seed=0, m_start=None, ceiling=M_CEILING,
               refine=2, workers=1, progress=None, **state_kw):
    """Sweep on a doubling M grid until the mean delta AIC turns positive.

    After the sign change is bracketed, ``refine`` rounds of geometric
    bisection add grid points inside the bracket.  If the ceiling is reached
    first the result is marked censored.
    """
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    d = setting_count(n_qubits)
    m = int(m_start or 4 * d)
    spec = ExperimentSpec(n_qubits, q, base_seed=base_seed, **state_kw)
    records = []

    def add(shots):
        recs = run_items([(spec, rep, shots) for rep in range(repetitions)], workers)
        records.extend(recs)
        mean = float(np.mean([r.delta_aic for r in recs]))
        if progress:
            progress(n_qubits, q, shots, mean)
        return mean

    lo = hi = None
    prev = None
    while m <= ceiling:
        mean = add(m)
        if mean > 0:
            if prev is None:
                break  # positive already at the first point: nothing to bracket
            lo, hi = prev, m
            break
        prev = m
        m *= 2
    censored = hi is None
    if not censored:
        for _ in range(refine):
            mid = int(round(np.sqrt(lo * hi)))
            if mid <= lo or mid >= hi:
                break
            if add(mid) > 0:
                hi = mid
            else:
                lo = mid
    records.sort(key=lambda r: (r.shots, r.rep))
    config = dict(asdict(spec), mStart=int(m_start or 4 * d), ceiling=ceiling, refine=refine,
                  repetitions=repetitions)
    return SweepResult(n_qubits, q, records, config, censored=censored)


def scaling_in_n(q, n_list, repetitions, base_seed=0, **kw):
    """[(N, crossing M or None)] plus the underlying sweeps."""
    if q <= 0:
        raise ValueError("q must be > 0")
    sweeps = [auto_sweep(n, q, repetitions, base_seed, **kw) for n in n_list]
    return [(s.n_qubits, s.crossing_m) for s in sweeps], sweeps


def scaling_in_q(n_qubits, q_list, repetitions, base_seed=0, **kw):
    """[(q, crossing M or None)] plus the underlying sweeps."""
    if any(q <= 0 for q in q_list):
        raise ValueError("all q must be > 0")
    sweeps = [auto_sweep(n_qubits, q, repetitions, base_seed, **kw) for q in q_list]
    return [(s.q, s.crossing_m) for s in sweeps], sweeps


def linear_fit_r2(x, y):
    x, y = np.asarray(x, float), np.asarray(y, float)
    slope, icept = np.polyfit(x, y, 1)
    resid = y - (slope * x + icept)
    ss_tot = ((y - y.mean()) ** 2).sum()
    return float(slope), float(icept), float(1 - (resid ** 2).sum() / ss_tot)


def loglog_slope(x, y):
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])

"""Command-line front end.

Every command accepts ``--config FILE`` (flat ``key = value`` lines, ``#``
comments); explicit command-line flags override the file.  Each invocation
writes into a fresh directory under ``--out`` named by UTC timestamp and a
hash of the resolved configuration.

Exit codes: 0 success, 1 internal failure, 2 validation error.
"""

import argparse
import hashlib
import json
import logging
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .estimation import fit_pi, fit_three_param
from .measurement import CountsDataset, DatasetParseError, generate_plan, sample_dataset, setting_count
from .oracle import MAX_QUBITS, oracle_check
from .selection import (TAG_SAMPLE, ExperimentSpec, auto_sweep, derive_seed, linear_fit_r2,
                        loglog_slope, sweep)

log = logging.getLogger("ghzaic")

ORACLE_TOL = 1e-9


class ValidationError(Exception):
    pass


def _int_list(text):
    return [int(x) for x in str(text).replace(",", " ").split()]


def _float_list(text):
    return [float(x) for x in str(text).replace(",", " ").split()]


def _bool(text):
    t = str(text).strip().lower()
    if t in {"1", "true", "yes", "on"}:
        return True
    if t in {"0", "false", "no", "off"}:
        return False
    raise ValueError(f"not a boolean: {text!r}")


# key -> (parser, default)
KEYS = {
    "qubits": (int, 5),
    "q": (float, 0.0),
    "epsilon": (float, 0.0),
    "phi": (float, 0.0),
    "delta": (float, 1.0),
    "shots": (int, None),
    "reps": (int, 1),
    "rep": (int, 0),
    "seed": (int, 0),
    "out": (str, "runs"),
    "workers": (int, 1),
    "m_grid": (_int_list, None),
    "m_start": (int, None),
    "ceiling": (int, 2**22),
    "refine": (int, 2),
    "qubits_list": (_int_list, [4, 5, 6, 7, 8, 9, 10]),
    "q_list": (_float_list, [0.01, 0.02, 0.04, 0.08]),
    "fixed_perturbation": (_bool, False),
    "samples": (int, 50),
    "model": (str, "pi"),
}


def read_config(path):
    """Parse a flat key = value file; unknown keys are rejected."""
    out = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from None
    for lineno, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in KEYS:
            raise ValidationError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            out[key] = KEYS[key][0](value)
        except ValueError as exc:
            raise ValidationError(f"{path}:{lineno}: bad value for {key}: {exc}") from None
    return out


def resolve(args, keys):
    cfg = {k: KEYS[k][1] for k in keys}
    if getattr(args, "config", None):
        from_file = read_config(args.config)
        extra = set(from_file) - set(keys)
        if extra:
            raise ValidationError(f"keys not used by this command: {sorted(extra)}")
        cfg.update(from_file)
    for k in keys:
        v = getattr(args, k, None)
        if v is not None:
            cfg[k] = v
    validate(cfg)
    return cfg


def validate(cfg):
    def need(cond, msg):
        if not cond:
            raise ValidationError(msg)

    if "qubits" in cfg:
        need(2 <= cfg["qubits"] <= 30, f"qubits={cfg['qubits']} outside [2, 30]")
    if "q" in cfg:
        need(0.0 <= cfg["q"] <= 1.0, f"q={cfg['q']} outside [0, 1]")
    if "reps" in cfg:
        need(cfg["reps"] >= 1, "reps must be >= 1")
    if "workers" in cfg:
        need(cfg["workers"] >= 1, "workers must be >= 1")
    if "epsilon" in cfg:
        need(-1 <= cfg["epsilon"] <= 1, "epsilon outside [-1, 1]")
    if "delta" in cfg:
        need(0 <= cfg["delta"] <= 1, "delta outside [0, 1]")
    if "phi" in cfg:
        need(-3.141592653589793 <= cfg["phi"] < 3.141592653589793, "phi outside [-pi, pi)")
    if "qubits_list" in cfg:
        need(all(2 <= n <= 30 for n in cfg["qubits_list"]), "qubits_list entries outside [2, 30]")
    if "q_list" in cfg:
        need(all(0 < q <= 1 for q in cfg["q_list"]), "q_list entries must lie in (0, 1]")
    if "model" in cfg:
        need(cfg["model"] in {"3p", "pi"}, f"model must be 3p or pi, got {cfg['model']!r}")
    if "samples" in cfg:
        need(cfg["samples"] >= 1, "samples must be >= 1")


def run_dir(cfg, command):
    digest = hashlib.sha256(json.dumps([command, cfg], sort_keys=True, default=str).encode()).hexdigest()[:10]
    stamp = datetime.now(timezone.utc).strftime("%Y%m%dT%H%M%S")
    path = Path(cfg["out"]) / f"{command}-{stamp}-{digest}"
    n = 1
    while path.exists():
        n += 1
        path = Path(cfg["out"]) / f"{command}-{stamp}-{digest}-{n}"
    path.mkdir(parents=True)
    return path


def metadata(cfg, command, **extra):
    return dict({"command": command, "version": __version__, "config": cfg}, **extra)


def write(path, text):
    try:
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"writing {path}: {exc}") from exc


def _spec(cfg):
    return ExperimentSpec(cfg["qubits"], cfg["q"], cfg["epsilon"], cfg["phi"], cfg["delta"],
                          cfg["seed"], cfg.get("fixed_perturbation", False))


def cmd_simulate(args):
    cfg = resolve(args, ["qubits", "q", "epsilon", "phi", "delta", "shots", "rep", "seed", "out"])
    d = setting_count(cfg["qubits"])
    if cfg["shots"] is None:
        cfg["shots"] = 100 * d
    if cfg["shots"] < d:
        raise ValidationError(f"shots={cfg['shots']} below the {d} settings")
    spec = _spec(cfg)
    state, pert_seed = spec.true_state(cfg["rep"])
    sample_seed = derive_seed(cfg["seed"], cfg["rep"], TAG_SAMPLE, cfg["shots"])
    ds = sample_dataset(state, generate_plan(cfg["qubits"]), cfg["shots"], sample_seed)
    out = run_dir(cfg, "simulate")
    write(out / "dataset.csv", ds.to_csv())
    write(out / "true_state.json", state.to_json())
    meta = metadata(cfg, "simulate", nQubits=cfg["qubits"], sampleSeed=sample_seed,
                    perturbationSeed=pert_seed, settings=d)
    write(out / "metadata.json", json.dumps(meta, indent=2))
    print(out / "dataset.csv")
    return 0


def _infer_qubits(path, explicit):
    if explicit is not None:
        return explicit
    meta = path.parent / "metadata.json"
    if meta.exists():
        doc = json.loads(meta.read_text())
        if "nQubits" in doc:
            return int(doc["nQubits"])
    return None


def load_dataset(path, n_qubits=None):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from None
    n = _infer_qubits(path, n_qubits)
    if n is None:
        # a full plan has D_N = (N + 1)(N + 2) / 2 settings
        n_set = len({line.split(",", 1)[0] for line in text.splitlines()[1:] if line.strip()})
        n = next((m for m in range(1, 31) if setting_count(m) == n_set), None)
        if n is None:
            raise ValidationError(f"{path}: cannot infer qubit number, pass --qubits")
    try:
        return CountsDataset.from_csv(text, n)
    except DatasetParseError as exc:
        raise ValidationError(f"{path}: {exc}") from None


def cmd_fit(args):
    ds = load_dataset(args.dataset, args.qubits)
    model = args.model or "pi"
    if model not in {"3p", "pi"}:
        raise ValidationError(f"model must be 3p or pi, got {model!r}")
    res = fit_three_param(ds) if model == "3p" else fit_pi(ds)
    out = Path(args.out) if args.out else Path(args.dataset).with_name(f"fit_{model}.json")
    write(out, res.to_json(indent=2))
    print(f"model={model} logLikelihood={res.log_likelihood:.10g} "
          f"paramCount={res.param_count} iterations={res.iterations} converged={res.converged}")
    return 0


def _progress_items(done, total):
    log.info("completed %d/%d work items", done, total)


def _progress_point(n, q, m, mean):
    log.info("N=%d q=%g M=%d mean delta_aic=%.3f", n, q, m, mean)


def cmd_sweep(args):
    cfg = resolve(args, ["qubits", "q", "epsilon", "phi", "delta", "reps", "seed", "out", "workers",
                         "m_grid", "m_start", "ceiling", "refine", "fixed_perturbation"])
    state_kw = dict(epsilon=cfg["epsilon"], phi=cfg["phi"], delta=cfg["delta"],
                    fixed_perturbation=cfg["fixed_perturbation"])
    try:
        if cfg["m_grid"]:
            res = sweep(cfg["qubits"], cfg["q"], cfg["m_grid"], cfg["reps"], cfg["seed"],
                        workers=cfg["workers"], progress=_progress_items, **state_kw)
        else:
            res = auto_sweep(cfg["qubits"], cfg["q"], cfg["reps"], cfg["seed"], m_start=cfg["m_start"],
                             ceiling=cfg["ceiling"], refine=cfg["refine"], workers=cfg["workers"],
                             progress=_progress_point, **state_kw)
    except ValueError as exc:
        raise ValidationError(str(exc)) from None
    out = run_dir(cfg, "sweep")
    write(out / "records.csv", res.records_csv())
    write(out / "summary.json", json.dumps(dict(res.summary(), **metadata(cfg, "sweep")), indent=2))
    print(f"crossingM={res.crossing_m} censored={res.censored}")
    print(out)
    return 0


def _write_scaling(cfg, command, pairs_key, sweeps, fit):
    out = run_dir(cfg, command)
    rows = ["N,q,M,rep,delta_aic,seed"]
    for s in sweeps:
        rows.extend(s.records_csv().splitlines()[1:])
    write(out / "records.csv", "\n".join(rows) + "\n")
    doc = metadata(cfg, command, points=[
        {pairs_key: (s.n_qubits if pairs_key == "N" else s.q), "crossingM": s.crossing_m,
         "censored": s.censored, "sweep": s.summary()} for s in sweeps], fit=fit)
    write(out / "summary.json", json.dumps(doc, indent=2))
    return out


def cmd_scaling_n(args):
    cfg = resolve(args, ["q", "qubits_list", "epsilon", "phi", "delta", "reps", "seed", "out",
                         "workers", "m_start", "ceiling", "refine", "fixed_perturbation"])
    if cfg["q"] <= 0:
        raise ValidationError("scaling-n needs q > 0")
    sweeps = [auto_sweep(n, cfg["q"], cfg["reps"], cfg["seed"], m_start=cfg["m_start"],
                         ceiling=cfg["ceiling"], refine=cfg["refine"], workers=cfg["workers"],
                         progress=_progress_point, epsilon=cfg["epsilon"], phi=cfg["phi"],
                         delta=cfg["delta"], fixed_perturbation=cfg["fixed_perturbation"])
              for n in cfg["qubits_list"]]
    pts = [(s.n_qubits, s.crossing_m) for s in sweeps if s.crossing_m is not None]
    fit = None
    if len(pts) >= 3:
        slope, icept, r2 = linear_fit_r2(*zip(*pts))
        fit = {"slope": slope, "intercept": icept, "r2": r2}
    out = _write_scaling(cfg, "scaling-n", "N", sweeps, fit)
    for s in sweeps:
        print(f"N={s.n_qubits} crossingM={s.crossing_m} censored={s.censored}")
    print(out)
    return 0


def cmd_scaling_q(args):
    cfg = resolve(args, ["qubits", "q_list", "epsilon", "phi", "delta", "reps", "seed", "out",
                         "workers", "m_start", "ceiling", "refine", "fixed_perturbation"])
    sweeps = [auto_sweep(cfg["qubits"], q, cfg["reps"], cfg["seed"], m_start=cfg["m_start"],
                         ceiling=cfg["ceiling"], refine=cfg["refine"], workers=cfg["workers"],
                         progress=_progress_point, epsilon=cfg["epsilon"], phi=cfg["phi"],
                         delta=cfg["delta"], fixed_perturbation=cfg["fixed_perturbation"])
              for q in cfg["q_list"]]
    pts = [(1.0 / s.q, s.crossing_m) for s in sweeps if s.crossing_m is not None]
    fit = {"loglogSlopeVsInverseQ": loglog_slope(*zip(*pts))} if len(pts) >= 2 else None
    out = _write_scaling(cfg, "scaling-q", "q", sweeps, fit)
    for s in sweeps:
        print(f"q={s.q} crossingM={s.crossing_m} censored={s.censored}")
    print(out)
    return 0


def cmd_oracle_check(args):
    n = args.qubits if args.qubits is not None else 4
    if not 1 <= n <= MAX_QUBITS:
        raise ValidationError(f"oracle-check supports 1 <= qubits <= {MAX_QUBITS}, got {n}")
    samples = args.samples if args.samples is not None else 50
    if samples < 1:
        raise ValidationError("samples must be >= 1")
    t0 = time.perf_counter()
    worst = oracle_check(n, samples, args.seed or 0, corrupt=args.corrupt_for_testing)
    ok = worst < ORACLE_TOL
    print(f"N={n} samples={samples} max deviation={worst:.3e} "
          f"({'PASS' if ok else 'FAIL'}, tol {ORACLE_TOL:g}, {time.perf_counter() - t0:.1f}s)")
    return 0 if ok else 1


def build_parser():
    p = argparse.ArgumentParser(prog="ghzaic", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, *names):
        sp.add_argument("--config")
        flags = {
            "qubits": dict(type=int), "q": dict(type=float), "epsilon": dict(type=float),
            "phi": dict(type=float), "delta": dict(type=float), "shots": dict(type=int),
            "reps": dict(type=int), "rep": dict(type=int), "seed": dict(type=int),
            "out": dict(), "workers": dict(type=int), "m_grid": dict(type=_int_list),
            "m_start": dict(type=int), "ceiling": dict(type=int), "refine": dict(type=int),
            "qubits_list": dict(type=_int_list), "q_list": dict(type=_float_list),
            "fixed_perturbation": dict(type=_bool),
        }
        for name in names:
            sp.add_argument("--" + name.replace("_", "-"), dest=name, default=None, **flags[name])

    sp = sub.add_parser("simulate", help="sample one synthetic dataset")
    common(sp, "qubits", "q", "epsilon", "phi", "delta", "shots", "rep", "seed", "out")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("fit", help="fit the 3p or PI model to a dataset CSV")
    sp.add_argument("dataset")
    sp.add_argument("--model", choices=["3p", "pi"], default="pi")
    sp.add_argument("--qubits", type=int)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("sweep", help="delta AIC against M at fixed N and q")
    common(sp, "qubits", "q", "epsilon", "phi", "delta", "reps", "seed", "out", "workers",
           "m_grid", "m_start", "ceiling", "refine", "fixed_perturbation")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("scaling-n", help="crossing M against qubit number")
    common(sp, "q", "qubits_list", "epsilon", "phi", "delta", "reps", "seed", "out", "workers",
           "m_start", "ceiling", "refine", "fixed_perturbation")
    sp.set_defaults(func=cmd_scaling_n)

    sp = sub.add_parser("scaling-q", help="crossing M against perturbation strength")
    common(sp, "qubits", "q_list", "epsilon", "phi", "delta", "reps", "seed", "out", "workers",
           "m_start", "ceiling", "refine", "fixed_perturbation")
    sp.set_defaults(func=cmd_scaling_q)

    sp = sub.add_parser("oracle-check", help="compare block probabilities with the 2^N oracle")
    sp.add_argument("--qubits", type=int)
    sp.add_argument("--samples", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--corrupt-for-testing", action="store_true", help=argparse.SUPPRESS)
    sp.set_defaults(func=cmd_oracle_check)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - top-level reporting
        print(f"internal error: {exc}", file=sys.stderr)
        log.debug("traceback", exc_info=True)
        return 1


if __name__ == "__main__":
    sys.exit(main())

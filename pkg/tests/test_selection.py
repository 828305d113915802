import numpy as np
import pytest

from ghzaic.measurement import generate_plan, sample_dataset
from ghzaic.selection import (K_3P, ExperimentSpec, RepRecord, SweepResult, aic, auto_sweep,
                              crossing_point, delta_aic, derive_seed, linear_fit_r2, loglog_slope,
                              run_item, scaling_in_n, scaling_in_q, sweep)
from ghzaic.states import pi_param_count


def test_aic_values():
    assert aic(-100, 3) == 206
    assert aic(0, 0) == 0
    assert aic(-2.7726, 55) == pytest.approx(115.5452)
    with pytest.raises(ValueError):
        aic(-1, -1)


def test_delta_aic_identity():
    spec = ExperimentSpec(4, 0.05, base_seed=3)
    state, _ = spec.true_state(0)
    ds = sample_dataset(state, generate_plan(4), 1500, 1)
    r = delta_aic(ds)
    assert r.delta_aic == r.aic_3p - r.aic_pi
    assert r.k_pi == pi_param_count(4) and r.k_3p == K_3P
    assert r.delta_aic == pytest.approx(2 * (r.ll_pi - r.ll_3p) - 2 * (r.k_pi - 3), abs=1e-9)
    assert r.delta_aic >= -2 * (r.k_pi - 3) - 2e-6


def test_derive_seed_stable_and_distinct():
    assert derive_seed(1, 2, 3) == derive_seed(1, 2, 3)
    seeds = {derive_seed(1, r, t, m) for r in range(5) for t in (1, 2) for m in (10, 20)}
    assert len(seeds) == 20
    assert derive_seed(1, 0, 1) != derive_seed(2, 0, 1)


def test_true_state_perturbation_fresh_or_pinned():
    fresh = ExperimentSpec(4, 0.1, base_seed=1)
    assert not fresh.true_state(0)[0].allclose(fresh.true_state(1)[0])
    pinned = ExperimentSpec(4, 0.1, base_seed=1, fixed_perturbation=True)
    assert pinned.true_state(0)[0].allclose(pinned.true_state(5)[0], atol=0)
    assert ExperimentSpec(4, 0.0).true_state(3)[1] is None


def test_crossing_point_exact_on_linear():
    ms = [100, 200, 400, 800]
    means = [-30.0, -10.0, 10.0, 50.0]
    assert crossing_point(ms, means) == pytest.approx(300.0)
    assert crossing_point(ms, [-1, -2, -3, -4]) is None
    assert crossing_point([1, 2], [1, 2]) is None
    # piecewise linear with slope 0.5 crossing at 250
    ms = np.array([100, 200, 300, 400])
    assert crossing_point(ms, 0.5 * (ms - 250)) == pytest.approx(250.0)


def _fake_records():
    recs = []
    for m, vals in [(10, [-3.0, -1.0]), (20, [1.0, 3.0])]:
        for rep, v in enumerate(vals):
            recs.append(RepRecord(5, 0.1, m, rep, v, 0))
    return recs


def test_sweep_result_statistics_and_csv():
    res = SweepResult(5, 0.1, _fake_records())
    assert res.grid() == [(10, -2.0, np.sqrt(2.0), 2), (20, 2.0, np.sqrt(2.0), 2)]
    assert res.crossing_m == pytest.approx(15.0)
    text = res.records_csv()
    assert text.splitlines()[0] == "N,q,M,rep,delta_aic,seed"
    again = SweepResult(5, 0.1, SweepResult.parse_records_csv(text))
    assert again.grid() == res.grid()
    summary = res.summary()
    assert summary["crossingM"] == pytest.approx(15.0) and summary["censored"] is False
    assert "negative favours" in summary["convention"]


def test_sweep_reproducible_and_validated():
    a = sweep(3, 0.05, [30, 60], 1, base_seed=4)
    b = sweep(3, 0.05, [30, 60], 1, base_seed=4)
    assert a.records_csv() == b.records_csv()
    with pytest.raises(ValueError):
        sweep(3, 0.05, [60, 30], 1)
    with pytest.raises(ValueError):
        sweep(3, 0.05, [5], 1)
    with pytest.raises(ValueError):
        sweep(3, 1.5, [30], 1)


def test_adding_grid_points_keeps_streams():
    a = sweep(3, 0.05, [30, 60], 2, base_seed=4)
    b = sweep(3, 0.05, [30, 45, 60], 2, base_seed=4)
    pick = {(r.shots, r.rep): r.delta_aic for r in b.records}
    for r in a.records:
        assert pick[(r.shots, r.rep)] == r.delta_aic


def test_workers_do_not_change_numbers():
    a = sweep(3, 0.1, [20, 40], 2, base_seed=8, workers=1)
    b = sweep(3, 0.1, [20, 40], 2, base_seed=8, workers=2)
    assert a.records_csv() == b.records_csv()


def test_q_zero_has_no_crossing():
    res = sweep(3, 0.0, [10, 40, 160], 4, base_seed=2)
    assert res.crossing_m is None
    assert all(mu < 0 for _, mu, _, _ in res.grid())


def test_auto_sweep_censored_at_ceiling():
    res = auto_sweep(3, 0.0, 2, base_seed=1, ceiling=80)
    assert res.censored and res.crossing_m is None
    assert max(r.shots for r in res.records) <= 80


def test_auto_sweep_finds_crossing_for_large_q():
    res = auto_sweep(3, 0.5, 3, base_seed=1)
    assert not res.censored
    assert res.crossing_m is not None and res.crossing_m > 0


def test_scaling_helpers():
    pairs, sweeps = scaling_in_n(0.5, [3], 2, base_seed=1)
    assert len(pairs) == 1 and pairs[0][0] == 3
    pairs, _ = scaling_in_q(3, [0.5], 2, base_seed=1)
    assert pairs[0][0] == 0.5
    with pytest.raises(ValueError):
        scaling_in_n(0.0, [3], 1)
    with pytest.raises(ValueError):
        scaling_in_q(3, [0.0], 1)


def test_regression_helpers():
    slope, icept, r2 = linear_fit_r2([1, 2, 3], [2, 4, 6])
    assert slope == pytest.approx(2) and r2 == pytest.approx(1)
    assert loglog_slope([1, 10, 100], [3, 30, 300]) == pytest.approx(1)


def test_run_item_records_fit_diagnostics():
    rec = run_item(ExperimentSpec(3, 0.1, base_seed=2), 0, 100)
    assert rec.pi_monotone and rec.ll_pi >= rec.ll_3p - 1e-6

from itertools import product
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ghzaic.measurement import (X_SETTING, Z_SETTING, CountsDataset, DatasetParseError,
                                InconsistentProbabilityError, MeasurementPlan, Setting,
                                generate_plan, outcome_distribution, plan_distributions,
                                projected_povm, sample_dataset, setting_count, shot_allocation)
from ghzaic.spin import rotation_to_axis
from ghzaic.states import PIState, ghz_state, random_pi_state, three_param_state


def ghz_brute_x(n):
    """p(k) for GHZ measured along +x, from amplitudes <s|GHZ> in the x basis."""
    plus = np.array([1, 1]) / np.sqrt(2)
    minus = np.array([1, -1]) / np.sqrt(2)
    p = np.zeros(n + 1)
    for signs in product([0, 1], repeat=n):
        # amplitude on |0..0> is prod of first components, on |1..1> of second
        a0 = np.prod([(plus, minus)[s][0] for s in signs])
        a1 = np.prod([(plus, minus)[s][1] for s in signs])
        amp = (a0 + a1) / np.sqrt(2)
        p[n - sum(signs)] += amp**2
    return p


def test_plan_sizes():
    assert len(generate_plan(5)) == 21
    assert len(generate_plan(2)) == comb(4, 2) == 6
    for n in range(1, 26):
        plan = generate_plan(n)
        assert len(plan) == setting_count(n) == comb(n + 2, n)
        vecs = np.array([s.vector for s in plan.settings])
        np.testing.assert_allclose(np.linalg.norm(vecs, axis=1), 1, atol=1e-12)
        assert len({tuple(np.round(v, 12)) for v in vecs}) == len(plan)


def test_plan_is_deterministic():
    assert generate_plan(7) == generate_plan(7)


def test_ghz_x_distribution():
    for n in range(2, 9):
        p = outcome_distribution(ghz_state(n), X_SETTING)
        brute = ghz_brute_x(n)
        np.testing.assert_allclose(p, brute, atol=1e-13)
        closed = [comb(n, k) * 2.0 ** (1 - n) if (n - k) % 2 == 0 else 0 for k in range(n + 1)]
        np.testing.assert_allclose(p, closed, atol=1e-13)


def test_incoherent_x_distribution():
    n = 6
    p = outcome_distribution(three_param_state(n, 0, 0, 0), X_SETTING)
    np.testing.assert_allclose(p, [comb(n, k) / 2**n for k in range(n + 1)], atol=1e-13)


@settings(max_examples=200, deadline=None)
@given(n=st.integers(2, 12), seed=st.integers(0, 2**32), theta=st.floats(0, np.pi),
       phi=st.floats(0, 2 * np.pi, exclude_max=True))
def test_normalisation(n, seed, theta, phi):
    p = outcome_distribution(random_pi_state(n, seed), Setting(theta, phi))
    assert abs(p.sum() - 1) < 1e-10
    assert p.min() >= 0


def test_plan_distributions_match_single(rng):
    s = random_pi_state(7, 2)
    plan = generate_plan(7)
    allp = plan_distributions(s, plan)
    for i in rng.choice(len(plan), 6, replace=False):
        np.testing.assert_allclose(allp[i], outcome_distribution(s, plan.settings[i]), atol=1e-13)


def _rz(a):
    return np.array([[np.cos(a), -np.sin(a), 0], [np.sin(a), np.cos(a), 0], [0, 0, 1]])


def _ry(a):
    return np.array([[np.cos(a), 0, np.sin(a)], [0, 1, 0], [-np.sin(a), 0, np.cos(a)]])


def test_rotation_covariance(rng):
    n = 6
    s = random_pi_state(n, 11)
    th0, ph0 = 0.7, 2.1
    rotated = PIState(n, s.two_js, s.weights, tuple(
        rotation_to_axis(tj, th0, ph0) @ b @ rotation_to_axis(tj, th0, ph0).conj().T
        for tj, b in zip(s.two_js, s.blocks)))
    inv = _ry(-th0) @ _rz(-ph0)
    for _ in range(10):
        st_ = Setting(rng.uniform(0, np.pi), rng.uniform(0, 2 * np.pi))
        back = Setting.from_vector(inv @ st_.vector)
        assert np.abs(outcome_distribution(rotated, st_) - outcome_distribution(s, back)).max() < 1e-10


def test_negative_probability_raises():
    s = ghz_state(3)
    bad = PIState(3, s.two_js, s.weights, s.blocks[:-1] + (np.diag([1.2, 0, 0, -0.2]).astype(complex),))
    with pytest.raises(InconsistentProbabilityError):
        outcome_distribution(bad, Z_SETTING)


def test_povm_completeness_and_projectors():
    n = 4
    plan = generate_plan(n)
    eff = projected_povm(plan)
    for s in range(len(plan)):
        for tj in (0, 2, 4):
            total = sum(eff[s][k][tj] for k in range(n + 1))
            assert np.abs(total - np.eye(tj + 1)).max() < 1e-10
            for k in range(n + 1):
                assert np.linalg.eigvalsh(eff[s][k][tj]).min() > -1e-12
    zplan = MeasurementPlan(n, (Z_SETTING,))
    for k in range(n + 1):
        for tj, e in projected_povm(zplan)[0][k].items():
            assert np.allclose(e, np.diag(np.diag(e)))


def test_povm_reproduces_distribution():
    n = 5
    plan = generate_plan(n)
    s = random_pi_state(n, 4)
    eff = projected_povm(plan)
    probs = plan_distributions(s, plan)
    for i in range(len(plan)):
        for k in range(n + 1):
            p = sum(w * np.trace(b @ eff[i][k][tj]).real for tj, w, b in zip(s.two_js, s.weights, s.blocks))
            assert abs(p - probs[i, k]) < 1e-12


def test_shot_allocation():
    assert list(shot_allocation(2 * 21, 21)) == [2] * 21
    a = shot_allocation(47, 21)
    assert a.sum() == 47 and list(a[:5]) == [3, 3, 3, 3, 3] and a[5] == 2


def test_sample_dataset_even_split():
    plan = generate_plan(5)
    ds = sample_dataset(ghz_state(5), plan, 42, seed=1)
    assert (ds.shots_per_setting == 2).all()
    assert ds.total_shots == 42


def test_sample_dataset_deterministic():
    plan = generate_plan(4)
    s = random_pi_state(4, 0)
    a = sample_dataset(s, plan, 1000, seed=5)
    b = sample_dataset(s, plan, 1000, seed=5)
    assert np.array_equal(a.counts, b.counts)


def test_sample_dataset_too_few_shots():
    with pytest.raises(ValueError):
        sample_dataset(ghz_state(5), generate_plan(5), 20, seed=0)


def test_sampling_concentration():
    n = 6
    s = random_pi_state(n, 8)
    st_ = Setting(1.0, 0.4)
    plan = MeasurementPlan(n, (st_,))
    shots = 10**6
    ds = sample_dataset(s, plan, shots, seed=3)
    p = outcome_distribution(s, st_)
    se = np.sqrt(p * (1 - p) / shots)
    freq = ds.counts[0] / shots
    inside = np.abs(freq - p) <= 4 * se + 1e-15
    assert inside.mean() >= 0.95


def test_csv_roundtrip():
    plan = generate_plan(5)
    ds = sample_dataset(random_pi_state(5, 1), plan, 2100, seed=2)
    text = ds.to_csv()
    assert text.splitlines()[0] == "setting_index,theta,phi,k,count"
    back = CountsDataset.from_csv(text, 5)
    assert np.array_equal(back.counts, ds.counts)
    assert back.plan == plan
    assert all(int(r.split(",")[4]) > 0 for r in text.splitlines()[1:])


@pytest.mark.parametrize("text,line", [
    ("", 1),
    ("setting_index,theta,phi,k,count\n0,0.1,0.2,x,3\n", 2),
    ("setting_index,theta,phi,k,count\n0,0.1,0.2,1,3\n0,0.1,0.3,2,1\n", 3),
    ("bad,header\n", 1),
])
def test_csv_parse_errors(text, line):
    with pytest.raises(DatasetParseError) as exc:
        CountsDataset.from_csv(text, 3)
    assert exc.value.line == line

import numpy as np
import pytest
from math import comb

from ghzaic import oracle
from ghzaic.measurement import Z_SETTING, generate_plan, outcome_distribution
from ghzaic.states import ghz_state, maximally_mixed, random_pi_state, orthogonalize_to_3p


def test_embed_ghz2():
    rho = oracle.embed(ghz_state(2)).rho
    expected = np.zeros((4, 4))
    expected[0, 0] = expected[0, 3] = expected[3, 0] = expected[3, 3] = 0.5
    np.testing.assert_allclose(rho, expected, atol=1e-14)


def test_embed_trace_and_purity():
    for n in range(2, 7):
        d = oracle.embed(random_pi_state(n, n)).validate()
        assert np.trace(d.rho).real == pytest.approx(1.0)
    rho = oracle.embed(ghz_state(3)).rho
    assert np.trace(rho @ rho).real == pytest.approx(1.0)


def test_schur_basis_orthonormal():
    for n in range(1, 7):
        b = oracle.schur_basis(n)
        cols = np.hstack([v.reshape(2**n, -1) for v in b.values()])
        assert cols.shape == (2**n, 2**n)
        np.testing.assert_allclose(cols.T @ cols, np.eye(2**n), atol=1e-12)


@pytest.mark.parametrize("n", range(2, 7))
def test_read_back_identity(n):
    s = random_pi_state(n, 40 + n)
    assert oracle.read_back(oracle.embed(s)).allclose(s, atol=1e-10)


def test_brute_ghz_z():
    for n in range(2, 7):
        p = oracle.brute_distribution(oracle.embed(ghz_state(n)), Z_SETTING)
        np.testing.assert_allclose(p, [0.5] + [0] * (n - 1) + [0.5], atol=1e-12)


def test_brute_maximally_mixed(rng):
    n = 5
    d = oracle.embed(maximally_mixed(n))
    st = oracle.check_settings(generate_plan(n), 3, rng)[2]
    np.testing.assert_allclose(oracle.brute_distribution(d, st), [comb(n, k) / 2**n for k in range(n + 1)],
                               atol=1e-12)


@pytest.mark.parametrize("n", range(2, 7))
def test_block_engine_matches_oracle(n, rng):
    plan = generate_plan(n)
    settings = oracle.check_settings(plan, 10, rng)
    worst = 0.0
    for i in range(10):
        s = random_pi_state(n, 1000 + i)
        if i % 3 == 0:
            s = orthogonalize_to_3p(s)
        d = oracle.embed(s)
        for st in settings:
            worst = max(worst, np.abs(outcome_distribution(s, st) - oracle.brute_distribution(d, st)).max())
    assert worst < 1e-9


def test_oracle_size_cap():
    with pytest.raises(oracle.UnsupportedSizeError):
        oracle.embed(random_pi_state(7, 0))


def test_oracle_check_detects_corruption():
    assert oracle.oracle_check(3, samples=3, seed=1) < 1e-9
    assert oracle.oracle_check(3, samples=3, seed=1, corrupt=True) > 1e-3

import math

import numpy as np
import pytest

from cycleglauber import mcsim, oracle, spectral
from cycleglauber.cycle_model import SpinConfiguration, log_gibbs_weights, new_couplings
from cycleglauber.errors import DimensionMismatch, InsufficientData, InvalidInput


def test_step_matches_bulk_run():
    cv = new_couplings([0.3, 0.5, 0.7, 0.2])
    state = mcsim.new_chain(4, seed=99)
    walked = state
    for _ in range(3000):
        walked = mcsim.step(walked, cv)
    bulk = mcsim.run(state, cv, 3000).state
    assert bulk == walked and bulk.steps == 3000
    # resuming mid-stream reproduces the same trajectory
    half = mcsim.run(mcsim.run(state, cv, 1234).state, cv, 1766).state
    assert half == bulk


def test_step_sizes():
    with pytest.raises(DimensionMismatch):
        mcsim.step(mcsim.new_chain(3, 0), new_couplings([0.1] * 4))
    with pytest.raises(InvalidInput):
        mcsim.new_chain(3, -1)


def test_free_acceptance():
    out = mcsim.run(mcsim.new_chain(3, seed=1), new_couplings([0.0] * 3), 10 ** 6)
    sigma = math.sqrt(0.25 / 10 ** 6)
    assert abs(out.accepted / 10 ** 6 - 0.5) <= 3 * sigma


def test_frozen_chain():
    cv = new_couplings([50.0] * 3)
    out = mcsim.run(mcsim.new_chain(3, seed=2), cv, 10 ** 5)
    assert out.accepted == 0 and out.state.config == SpinConfiguration.all_plus(3)


def test_stationary_distribution():
    cv = new_couplings([0.5] * 4)
    sweeps = 10 ** 7
    out = mcsim.run(mcsim.new_chain(4, seed=3), cv, 4 * sweeps, count_visits=True)
    emp = out.visits / out.visits.sum()
    w = log_gibbs_weights(cv)
    pi = np.exp(w - w.max())
    pi /= pi.sum()
    assert 0.5 * np.abs(emp - pi).sum() < 0.01


def test_detailed_balance_flows():
    cv = new_couplings([0.3, 0.5, 0.7])
    out = mcsim.run(mcsim.new_chain(3, seed=4), cv, 3 * 10 ** 6, record_every=1,
                    count_visits=True, count_flips=True)
    w = log_gibbs_weights(cv)
    for k in range(8):
        for x in range(3):
            other = k ^ (1 << x)
            fwd, back = out.flips[k, x], out.flips[other, x]
            # conditional rates P(k -> other) / P(other -> k) = pi(other) / pi(k)
            log_ratio = math.log(fwd / out.visits[k]) - math.log(back / out.visits[other])
            assert abs(log_ratio - (w[other] - w[k])) <= 4 * math.sqrt(1 / fwd + 1 / back)


def test_estimate_uniform_closed_form():
    cv = new_couplings([0.5] * 8)
    est = mcsim.estimate_relaxation(cv, 10 ** 6, seed=11)
    assert abs(est.tau2_hat - (math.e ** 2 + 1) / 2) <= 3 * est.stderr
    assert est.tau2_hat == pytest.approx(1 / (8 * (1 - est.mu2_hat)), rel=1e-12)
    assert est.stderr > 0 and est.generator == "philox4x64" and est.seed == 11


def test_estimate_mu2_against_dense_oracle():
    cv = new_couplings([0.3, 0.5, 0.7])
    est = mcsim.estimate_relaxation(cv, 10 ** 6, seed=12)
    mu2 = oracle.second_eigenvalue(oracle.build_transition_matrix(cv))
    assert abs(est.mu2_hat - mu2) <= 3 * est.mu2_stderr


def test_estimate_free_chain():
    est = mcsim.estimate_relaxation(new_couplings([0.0] * 4), 4 * 10 ** 5, seed=13)
    assert abs(est.mu2_hat - 0.75) <= 3 * est.mu2_stderr


def test_reproducible():
    cv = new_couplings([0.3, 0.5, 0.7])
    a = mcsim.estimate_relaxation(cv, 10 ** 5, seed=5)
    b = mcsim.estimate_relaxation(cv, 10 ** 5, seed=5)
    c = mcsim.estimate_relaxation(cv, 10 ** 5, seed=6)
    assert a == b and a != c


def test_insufficient_data():
    with pytest.raises(InsufficientData):
        mcsim.estimate_relaxation(new_couplings([0.3, 0.5, 0.7]), 2000, seed=1)


def test_magnetization_mode():
    cv = new_couplings([0.5] * 5)
    est = mcsim.estimate_relaxation(cv, 2 * 10 ** 5, seed=8, observable="magnetization")
    # uniform couplings: magnetization is the exact eigenfunction
    assert abs(est.tau2_hat - (math.e ** 2 + 1) / 2) <= 3 * est.stderr
    with pytest.raises(InvalidInput):
        mcsim.estimate_relaxation(cv, 10 ** 4, observable="energy")


def test_stderr_scaling():
    cv = new_couplings([0.5] * 4)
    small = [mcsim.estimate_relaxation(cv, 10 ** 5, seed=100 + r).stderr for r in range(10)]
    large = [mcsim.estimate_relaxation(cv, 2 * 10 ** 5, seed=200 + r).stderr for r in range(10)]
    ratio = np.mean(small) / np.mean(large)
    assert abs(ratio / math.sqrt(2) - 1) <= 0.3


def test_pooling():
    cv = new_couplings([0.5] * 4)
    ests = [mcsim.estimate_relaxation(cv, 10 ** 5, seed=s) for s in (1, 2, 3)]
    tau, err = mcsim.pool_estimates(ests)
    assert err < min(e.stderr for e in ests)
    assert abs(tau - spectral.solve(cv).tau2) <= 3 * err

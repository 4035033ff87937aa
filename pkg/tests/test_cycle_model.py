import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cycleglauber.cycle_model import (
    SpinConfiguration,
    all_spins,
    flip_probability,
    log_gibbs_weight,
    log_gibbs_weights,
    new_couplings,
    scaled_hyperbolics,
)
from cycleglauber.errors import (
    DimensionMismatch,
    IndexOutOfRange,
    InvalidCoupling,
    InvalidInput,
    InvalidSize,
)

couplings_st = st.lists(st.floats(0.0, 5.0), min_size=3, max_size=8)


def test_new_couplings_uniform():
    cv = new_couplings([0.5, 0.5, 0.5])
    assert cv.n == 3
    np.testing.assert_allclose(cv.s, [1.1752011936438014] * 3, rtol=1e-15)


def test_new_couplings_zero():
    cv = new_couplings([0.0, 0.0, 0.0])
    assert list(cv.s) == [0, 0, 0] and list(cv.c) == [1, 1, 1]


@pytest.mark.parametrize("bad", [[1.0, 2.0], [], [1.0]])
def test_too_short(bad):
    with pytest.raises(InvalidSize):
        new_couplings(bad)


@pytest.mark.parametrize("bad", [[1, -0.1, 1], [1, math.nan, 1], [1, math.inf, 1], ["a", 1, 1]])
def test_invalid_entries(bad):
    with pytest.raises(InvalidCoupling):
        new_couplings(bad)


def test_arrays_read_only():
    cv = new_couplings([0.1, 0.2, 0.3])
    with pytest.raises(ValueError):
        cv.j[0] = 1.0


@given(couplings_st)
def test_hyperbolic_identity(values):
    cv = new_couplings(values)
    # c^2 - s^2 = 1 within 8 ulps of c^2
    resid = np.abs(cv.c ** 2 - cv.s ** 2 - 1)
    assert np.all(resid <= 8 * np.spacing(cv.c ** 2))
    assert np.all(cv.c >= 1) and np.all(cv.s >= 0)


def test_scaled_hyperbolics_large():
    s, c, e = scaled_hyperbolics(np.array([400.0, 300.0]), 400.0)
    assert np.all(np.isfinite(s)) and np.all(np.isfinite(c))
    assert s[0] == pytest.approx(0.5) and c[0] == pytest.approx(0.5)
    assert e[0] == 0.0 or e[0] < 1e-300


@given(st.integers(3, 10), st.data())
def test_index_round_trip(n, data):
    index = data.draw(st.integers(0, 2 ** n - 1))
    cfg = SpinConfiguration.from_index(n, index)
    assert SpinConfiguration.from_spins(cfg.spins).index == index


def test_configuration_errors():
    with pytest.raises(IndexOutOfRange):
        SpinConfiguration.from_index(3, 8)
    with pytest.raises(InvalidInput):
        SpinConfiguration.from_spins([1, 0, 1])
    with pytest.raises(IndexOutOfRange):
        SpinConfiguration.all_plus(3).flipped(3)


def test_log_gibbs_examples():
    half = new_couplings([0.5] * 3)
    assert log_gibbs_weight(SpinConfiguration.all_plus(3), half) == 1.5
    assert log_gibbs_weight(SpinConfiguration.from_spins([1, -1, 1]), half) == -0.5
    ones = new_couplings([1.0] * 4)
    assert log_gibbs_weight(SpinConfiguration.from_spins([1, 1, -1, -1]), ones) == 0.0
    with pytest.raises(DimensionMismatch):
        log_gibbs_weight(SpinConfiguration.all_plus(4), half)


def test_vectorised_weights_match():
    cv = new_couplings([0.3, 0.5, 0.7, 0.2])
    w = log_gibbs_weights(cv)
    for k in range(16):
        assert w[k] == pytest.approx(log_gibbs_weight(SpinConfiguration.from_index(4, k), cv), abs=1e-15)
    assert np.array_equal(all_spins(4)[5], SpinConfiguration.from_index(4, 5).spins)


def test_flip_probability_examples():
    half = new_couplings([0.5] * 3)
    for x in range(3):
        assert flip_probability(SpinConfiguration.all_plus(3), x, half) == pytest.approx(
            (1 - math.tanh(1)) / 2, rel=1e-15)
    free = new_couplings([0.0] * 3)
    for k in range(8):
        assert flip_probability(SpinConfiguration.from_index(3, k), 1, free) == 0.5
    cv = new_couplings([0.3, 0.5, 0.7])
    # frozen from a brute-force exp-ratio evaluation
    p = flip_probability(SpinConfiguration.from_spins([1, -1, 1]), 1, cv)
    assert p == pytest.approx(0.8320183851339246, rel=1e-14)
    with pytest.raises(IndexOutOfRange):
        flip_probability(SpinConfiguration.all_plus(3), 3, cv)
    with pytest.raises(DimensionMismatch):
        flip_probability(SpinConfiguration.all_plus(4), 0, cv)


@settings(max_examples=50)
@given(st.lists(st.floats(0.0, 5.0), min_size=3, max_size=8))
def test_heat_bath_balance_and_ratio(values):
    cv = new_couplings(values)
    n = cv.n
    for k in range(2 ** n):
        cfg = SpinConfiguration.from_index(n, k)
        for x in range(n):
            other = cfg.flipped(x)
            p, q = flip_probability(cfg, x, cv), flip_probability(other, x, cv)
            assert abs(p + q - 1) <= 1e-14
            delta = log_gibbs_weight(other, cv) - log_gibbs_weight(cfg, cv)
            assert abs(p - 1 / (1 + math.exp(-delta))) <= 1e-12


@given(st.floats(0.0, 4.0), st.floats(0.0, 4.0), st.floats(0.0, 1.0))
def test_flip_non_increasing_when_aligned(a, b, bump):
    cv = new_couplings([a, b, 0.3])
    up = new_couplings([a + bump, b, 0.3])
    cfg = SpinConfiguration.all_plus(3)
    assert flip_probability(cfg, 1, up) <= flip_probability(cfg, 1, cv)


def test_transforms():
    cv = new_couplings([0.1, 0.2, 0.3, 0.4])
    assert cv.rolled(1).tolist() == [0.2, 0.3, 0.4, 0.1]
    assert cv.reflected().tolist() == [0.4, 0.3, 0.2, 0.1]
    assert cv.perturbed(2, 0.5).tolist() == [0.1, 0.2, 0.8, 0.4]
    assert cv.scaled(2.0) == new_couplings([0.2, 0.4, 0.6, 0.8])
    assert hash(cv) == hash(new_couplings([0.1, 0.2, 0.3, 0.4]))

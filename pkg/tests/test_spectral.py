import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cycleglauber import spectral
from cycleglauber.cycle_model import new_couplings
from cycleglauber.errors import (
    DimensionMismatch,
    InvalidInput,
    NoConvergence,
    NotDifferentiableHere,
    ZeroMatrix,
)

# frozen from an independent brute-force eigendecomposition of the 2**n chain
LAMBDA1_357 = 0.765796999076929
TAU2_3572 = 3.544580478931891

positive_st = st.lists(st.floats(0.01, 2.0), min_size=3, max_size=16)


def pair(values):
    return spectral.dominant_pair(spectral.build_m(new_couplings(values)))


def test_build_m_uniform():
    m = spectral.build_m(new_couplings([0.5] * 4))
    np.testing.assert_allclose(m.sub, math.tanh(1) / 2, rtol=1e-15)
    np.testing.assert_allclose(m.sup, math.tanh(1) / 2, rtol=1e-15)


def test_build_m_entry():
    m = spectral.build_m(new_couplings([0.3, 0.5, 0.7]))
    expected = math.sinh(0.6) / (math.cosh(0.6) + math.cosh(1.0))
    assert m.sub[1] == pytest.approx(expected, rel=1e-14)
    assert m.sub[1] == pytest.approx(0.23333072502147248, rel=1e-14)


def test_build_m_saturated():
    m = spectral.build_m(new_couplings([50.0] * 3))
    assert np.all(m.sub == 0.5) and np.all(m.sup == 0.5)
    m = spectral.build_m(new_couplings([500.0, 600.0, 700.0]))
    assert np.all(np.isfinite(m.sub)) and np.all(np.isfinite(m.defect))


def test_build_m_zero():
    with pytest.raises(ZeroMatrix):
        spectral.build_m(new_couplings([0.0] * 3))


@given(positive_st)
def test_m_invariants(values):
    cv = new_couplings(values)
    m = spectral.build_m(cv)
    assert np.all(m.sub >= 0) and np.all(m.sup >= 0)
    q = np.roll(cv.c, 1) + cv.c
    np.testing.assert_allclose(m.sub, np.roll(cv.s, 1) / q, rtol=1e-13)
    np.testing.assert_allclose(m.sup, cv.s / q, rtol=1e-13)
    assert m.reversibility_residual() <= 1e-13
    np.testing.assert_allclose(m.defect, 1 - m.sub - m.sup, atol=1e-14)


@pytest.mark.parametrize("n", [3, 4, 7, 16, 64])
@pytest.mark.parametrize("j", [0.1, 0.5, 1.0, 2.0])
def test_uniform_closed_form(n, j):
    res = pair([j] * n)
    assert res.lambda1 == pytest.approx(math.tanh(2 * j), rel=1e-12)
    np.testing.assert_allclose(res.x, 1 / math.sqrt(n), rtol=1e-12)
    assert abs(res.tau2 / ((math.exp(4 * j) + 1) / 2) - 1) <= 1e-10


def test_known_instances():
    assert pair([0.3, 0.5, 0.7]).lambda1 == pytest.approx(LAMBDA1_357, abs=1e-13)
    assert pair([0.3, 0.5, 0.7, 0.2]).tau2 == pytest.approx(TAU2_3572, rel=1e-12)
    res = spectral.dominant_pair(spectral.build_m(new_couplings([0.5] * 3)), tol=1e-13)
    assert res.tau2 == pytest.approx(4.1945280495, abs=1e-10)


@given(positive_st)
def test_result_invariants(values):
    res = pair(values)
    assert res.residual <= 1e-11 * max(1, res.lambda1)
    assert np.all(res.x > 0) and np.all(res.left > 0)
    assert res.tau2 * (1 - res.lambda1) == pytest.approx(1, rel=1e-12)
    assert res.tau_star == pytest.approx(res.tau2 - 1, rel=1e-12)


@given(positive_st)
def test_left_vector(values):
    cv = new_couplings(values)
    m = spectral.build_m(cv)
    res = spectral.dominant_pair(m)
    dense = m.to_dense()
    np.testing.assert_allclose(res.left @ dense, res.lambda1 * res.left, atol=1e-12)


def test_non_convergence():
    with pytest.raises(NoConvergence) as info:
        spectral.dominant_pair(spectral.build_m(new_couplings([0.3, 0.5, 0.7, 0.2])), max_iter=2)
    assert info.value.residual > 0
    with pytest.raises(InvalidInput):
        spectral.dominant_pair(spectral.build_m(new_couplings([0.3] * 3)), tol=0)


def test_rayleigh_examples(rng):
    cv = new_couplings([0.3, 0.5, 0.7, 0.2])
    assert spectral.rayleigh(np.ones(4), cv) == pytest.approx(cv.s.sum() / cv.c.sum(), rel=1e-14)
    res = spectral.dominant_pair(spectral.build_m(cv))
    assert abs(spectral.rayleigh(res.x, cv) - res.lambda1) <= 1e-10
    uni = new_couplings([0.4] * 6)
    alt = np.array([1, -1] * 3, dtype=float)
    assert spectral.rayleigh(alt, uni) == pytest.approx(-math.tanh(0.8), rel=1e-14)
    assert np.min(np.linalg.eigvals(spectral.build_m(uni).to_dense()).real) == pytest.approx(-math.tanh(0.8))
    for _ in range(1000):
        assert spectral.rayleigh(rng.normal(size=4), cv) <= res.lambda1 + 1e-10
    with pytest.raises(InvalidInput):
        spectral.rayleigh(np.zeros(4), cv)
    with pytest.raises(DimensionMismatch):
        spectral.rayleigh(np.ones(3), cv)


@settings(max_examples=60)
@given(positive_st, st.integers(1, 15))
def test_relabeling_invariance(values, k):
    cv = new_couplings(values)
    base = pair(values).lambda1
    assert abs(spectral.dominant_pair(spectral.build_m(cv.rolled(k))).lambda1 - base) <= 1e-10
    assert abs(spectral.dominant_pair(spectral.build_m(cv.reflected())).lambda1 - base) <= 1e-10


@pytest.mark.parametrize("j", [0.1, 0.5, 1.5])
def test_gradient_uniform(j):
    g = spectral.lambda_gradient(new_couplings([j] * 3))
    np.testing.assert_allclose(g, (2 / 3) * (1 - math.tanh(2 * j) ** 2), rtol=1e-10)


def test_gradient_finite_difference():
    cv = new_couplings([0.3, 0.5, 0.7])
    g = spectral.lambda_gradient(cv)
    h = 1e-5
    for i in range(3):
        up = pair(cv.perturbed(i, h).tolist()).lambda1
        down = pair(cv.perturbed(i, -h).tolist()).lambda1
        assert abs((up - down) / (2 * h) / g[i] - 1) <= 1e-6
    lg = spectral.log_tau2_gradient(cv)
    np.testing.assert_allclose(lg, g / (1 - pair([0.3, 0.5, 0.7]).lambda1), rtol=1e-12)


def test_gradient_positive(rng):
    for _ in range(1000):
        n = int(rng.integers(3, 17))
        g = spectral.lambda_gradient(new_couplings(rng.uniform(0.01, 2.0, n)))
        assert np.all(g > 0)


def test_gradient_needs_positive():
    with pytest.raises(NotDifferentiableHere):
        spectral.lambda_gradient(new_couplings([0.3, 0.0, 0.7]))


def test_open_chain_allowed():
    # one zero edge still leaves M irreducible
    res = spectral.solve(new_couplings([0.5, 0.5, 0.5, 0.0]))
    assert 0 < res.lambda1 < 1


def test_solve_dispatch():
    assert spectral.solve(new_couplings([0.5] * 4)).precision == "double"
    assert spectral.solve(new_couplings([25.0] * 4)).precision == "extended"
    assert spectral.solve(new_couplings([0.5] * 4), precision="extended").precision == "extended"
    with pytest.raises(InvalidInput):
        spectral.solve(new_couplings([0.5] * 4), precision="quad")


def test_solve_falls_back_when_double_stalls(monkeypatch):
    def stalled(*args, **kwargs):
        raise NoConvergence("stalled", 1e-3)

    cv = new_couplings([2.0, 2.0, 0.05, 2.0, 2.0, 2.0, 0.05, 2.0])
    ref = spectral.solve(cv)
    monkeypatch.setattr(spectral, "dominant_pair", stalled)
    res = spectral.solve(cv)
    assert res.precision == "extended"
    assert float(res.gap) == pytest.approx(float(ref.gap), rel=1e-12)
    with pytest.raises(NoConvergence):
        spectral.solve(cv, precision="double")


def test_spectrum_of_l():
    cv = new_couplings([0.3, 0.5, 0.7, 0.2])
    m = spectral.build_m(cv).to_dense()
    n = cv.n
    lam = np.sort(np.linalg.eigvals(m).real)
    big = np.sort(np.linalg.eigvals((1 - 1 / n) * np.eye(n) + m / n).real)
    np.testing.assert_allclose(big, 1 - (1 - lam) / n, atol=1e-14)

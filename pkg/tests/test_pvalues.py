import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

import oracles
from chbell.errors import DomainError, InvalidParameterError
from chbell.pvalues import (
    binomial_pvalue,
    epsilon_model,
    log_binomial_pvalue,
    log_mcdiarmid_bound,
    mcdiarmid_bound,
    normal_pvalue,
    normal_sigma,
    success_count,
)


def test_trivial_binomial():
    assert binomial_pvalue(2, 2) == pytest.approx(0.25, rel=1e-15)
    assert binomial_pvalue(-3, 3) == 1.0


def test_parity_convention():
    assert success_count(1, 3) == 2
    with pytest.raises(InvalidParameterError):
        success_count(591, 9380)
    assert success_count(591, 9380, lenient=True) == 4986
    with pytest.raises(InvalidParameterError):
        binomial_pvalue(5, 3)


@given(st.integers(1, 30).flatmap(lambda m: st.tuples(st.just(m), st.integers(-m, m))),
       st.sampled_from([Fraction(1, 2), Fraction(1, 3), Fraction(3, 5)]))
def test_binomial_matches_exact_rational_sum(mj, p0):
    m, J = mj
    if (m + J) % 2:
        J -= 1
    k = (m + J) // 2
    exact = oracles.binomial_tail(k, m, p0)
    assert binomial_pvalue(J, m, float(p0)) == pytest.approx(float(exact), rel=1e-12, abs=0)


def test_deep_tail_stays_in_log_space():
    logp = log_binomial_pvalue(6000, 10000)
    assert math.isfinite(logp) and logp < math.log(1e-300)
    exact = oracles.binomial_tail(8000, 10000)
    assert logp == pytest.approx(math.log(exact.numerator) - math.log(exact.denominator), rel=1e-10)


def test_domain_errors():
    with pytest.raises(DomainError):
        binomial_pvalue(1, 3, p0=1.0)
    with pytest.raises(InvalidParameterError):
        normal_sigma(1, 0)


def test_normal_sigma_identities():
    assert normal_sigma(0, 100) == 0
    assert normal_sigma(49, 49) == pytest.approx(7.0)
    assert normal_sigma(126715, 2011897) == pytest.approx(89.3, abs=0.1)
    p, logp = normal_pvalue(0, 10)
    assert p == pytest.approx(0.5) and logp == pytest.approx(math.log(0.5))


@pytest.mark.parametrize("L, m", [(0, 10), (10, 10), (-1, 10), (11, 10)])
def test_mcdiarmid_domain(L, m):
    with pytest.raises(DomainError):
        mcdiarmid_bound(L, m)


@given(st.integers(2, 5000).flatmap(lambda m: st.tuples(st.integers(1, m - 1), st.just(m))))
def test_mcdiarmid_log_consistency(Lm):
    L, m = Lm
    logb = log_mcdiarmid_bound(L, m)
    assert logb < 0
    assert mcdiarmid_bound(L, m) == pytest.approx(math.exp(logb), rel=1e-12)
    t = L / m
    direct = ((2 / (2 + t)) ** ((2 + t) / 3) * (1 / (1 - t)) ** ((1 - t) / 3))
    assert logb == pytest.approx(m * math.log(direct), rel=1e-9)


def test_epsilon_model():
    assert epsilon_model(0).adjusted_p0 == 0.5 and epsilon_model(0).mean_bound == 0
    assert epsilon_model(0.25).mean_bound == pytest.approx(0.8)
    assert round(epsilon_model(0.006).adjusted_p0, 3) == 0.512
    for bad in (-0.01, 0.5, 1.0):
        with pytest.raises(DomainError):
            epsilon_model(bad)


@given(st.floats(0, 0.499), st.floats(0, 0.499))
def test_adjusted_p0_increasing(e1, e2):
    lo, hi = sorted((e1, e2))
    if hi - lo > 1e-9:
        assert epsilon_model(lo).adjusted_p0 < epsilon_model(hi).adjusted_p0
    m = epsilon_model(lo)
    assert m.mean_bound == pytest.approx(2 * m.adjusted_p0 - 1)

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eulerfactory.padic import (PadicContext, PrecisionExhausted, TruncatedSeries, kronecker_mul,
                                reduce_fraction, series_inverse_mod, teichmueller, vp, zeta_p3, zeta_p3_kummer)


def test_vp():
    assert vp(250, 5) == 3
    assert vp(7, 5) == 0
    with pytest.raises(ValueError):
        vp(0, 5)


@given(st.lists(st.integers(0, 10 ** 30), min_size=1, max_size=20),
       st.lists(st.integers(0, 10 ** 30), min_size=1, max_size=20))
def test_kronecker_matches_schoolbook(a, b):
    n = len(a) + len(b) - 1
    school = [0] * n
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            school[i + j] += x * y
    assert kronecker_mul(a, b) == school


@given(st.lists(st.integers(-50, 50), min_size=1, max_size=12), st.sampled_from([5, 7, 11]))
def test_series_inverse(a, p):
    a = [1 + p * a[0]] + a[1:]
    mod = p ** 6
    inv = series_inverse_mod(a, mod, len(a))
    prod = kronecker_mul([c % mod for c in a], inv, len(a))
    assert [c % mod for c in prod] == [1] + [0] * (len(a) - 1)


def test_precision_tracking_multiplication():
    ctx = PadicContext(5, 4, 4)
    s = TruncatedSeries.from_rationals([Fraction(1, 5), 1, 2], ctx)
    assert s.denominator_valuation == 1
    sq = s * s
    assert sq.agrees_with([Fraction(1, 25), Fraction(2, 5), 1 + Fraction(4, 5)], 3)


def test_inverse_of_unit_series():
    ctx = PadicContext(7, 4, 4)
    vals = [1, 3, Fraction(1, 2), 5, 0, 1]
    s = TruncatedSeries.from_rationals(vals, ctx)
    assert (s * s.inverse()).agrees_with([1, 0, 0, 0, 0, 0])


def test_inverse_needs_unit():
    ctx = PadicContext(7, 4, 4)
    with pytest.raises(ZeroDivisionError):
        TruncatedSeries([7, 1], ctx).inverse()


def test_precision_exhausted():
    ctx = PadicContext(5, 4, 0)
    with pytest.raises(PrecisionExhausted):
        TruncatedSeries([1, 2], ctx, v=2, digits=4)


def test_theta_and_compose():
    ctx = PadicContext(5, 3, 2)
    s = TruncatedSeries([1, 1, 1, 1], ctx)
    assert s.theta(2).coeffs[:4] == [0, 1, 4, 9]
    assert s.compose_tp().coeffs == [1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1]


@pytest.mark.parametrize("p", [5, 7, 11, 13])
@pytest.mark.parametrize("t0", [1, -1, Fraction(1, 2)])
def test_teichmueller(p, t0):
    ctx = PadicContext(p, 5, 0)
    mu = teichmueller(t0, ctx)
    assert pow(mu, p - 1, ctx.modulus) == 1
    assert (mu - reduce_fraction(Fraction(t0), p)) % p == 0


@pytest.mark.parametrize("p", [5, 7, 11, 13])
def test_zeta_p3_two_F_agree(p):
    assert zeta_p3(p, 3) == zeta_p3(p, 3, F=p * p)


@pytest.mark.parametrize("p", [5, 7, 11, 13, 17, 19])
def test_zeta_p3_kummer(p):
    assert zeta_p3(p, 1) == zeta_p3_kummer(p)


def test_zeta_p3_rejects_small_primes():
    with pytest.raises(ValueError):
        zeta_p3(3, 2)


@settings(max_examples=30)
@given(st.integers(1, 10 ** 6), st.sampled_from([7, 11, 13]))
def test_teichmueller_idempotent(t, p):
    if t % p == 0:
        t += 1
    ctx = PadicContext(p, 4, 0)
    mu = teichmueller(t, ctx)
    assert teichmueller(mu, ctx) == mu

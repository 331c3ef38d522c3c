from fractions import Fraction
from itertools import permutations

import pytest

from eulerfactory.operator import CalabiYauOperator, discriminant
from eulerfactory.padic import PadicContext, teichmueller
from eulerfactory.umatrix import (ULimitMatrix, auto_guard, calibrate_x, clear_denominators, compute_U_series,
                                  rational_reconstruction, rational_umatrix, reconstruct_x, x_mod)

THETA4 = CalabiYauOperator(((0, 0, 0, 0, 1),))


def _det(M, mod):
    total = 0
    for perm in permutations(range(4)):
        sign = 1
        for i in range(4):
            for j in range(i + 1, 4):
                if perm[i] > perm[j]:
                    sign = -sign
        term = sign
        for i in range(4):
            term *= M[i][perm[i]]
        total += term
    return total % mod


def test_limit_matrix():
    assert ULimitMatrix(5, 4, 2).matrix() == [[1, 0, 0, 0], [0, 5, 0, 0], [0, 0, 25, 0], [250, 0, 0, 125]]


def test_theta4_is_constant():
    R = rational_umatrix(THETA4, 7, 4)
    assert R.x == 0
    assert R.delta == [0, 0, 0, 0]
    U = R.evaluate(1)
    assert U == [[1, 0, 0, 0], [0, 7, 0, 0], [0, 0, 49, 0], [0, 0, 0, 343]]


@pytest.mark.parametrize("p", [7, 11])
def test_affinity_in_x(quintic, p):
    n = 3 * p
    U = compute_U_series(quintic, p, PadicContext(p, 4, auto_guard(p, n)), 0, n)
    mod = p ** 4
    e0, e1, e3 = U.entries(0), U.entries(1), U.entries(3)
    for i in range(4):
        for j in range(4):
            for a, b, c in zip(e0[i][j], e1[i][j], e3[i][j]):
                assert (c - a - 3 * (b - a)) % mod == 0
                assert (b - a) % p ** 3 == 0


@pytest.mark.parametrize("p", [7, 11, 13])
def test_round_trip_and_calibration(quintic, p):
    disc = discriminant(quintic)
    R = rational_umatrix(quintic, p, 4)
    n = R.order
    U = compute_U_series(quintic, p, PadicContext(p, 4, auto_guard(p, n)), 0, n)
    U.x = calibrate_x(U, disc)
    assert U.x == R.x
    assert R.expand(n) == U.entries()
    assert clear_denominators(U, disc).same_shape(R)


@pytest.mark.parametrize("p", [7, 11, 13, 17])
@pytest.mark.parametrize("t0", [1, 2, Fraction(1, 3)])
def test_det_is_p6(quintic, p, t0):
    R = rational_umatrix(quintic, p, 4)
    mu = teichmueller(t0, PadicContext(p, 4, 0))
    if discriminant(quintic)(mu) % p == 0:
        pytest.skip("singular fibre")
    assert _det(R.evaluate(mu), p ** 4) == p ** 6 % p ** 4


def test_simple_delta_pattern(quintic):
    R = rational_umatrix(quintic, 7, 5)
    assert R.delta[:4] == [0, 0, 0, 0]


def test_x_is_p_independent(quintic, apery):
    for op, x in ((quintic, Fraction(-40)), (apery, Fraction(-6))):
        cal = {p: (rational_umatrix(op, p, 5).x, 2) for p in (7, 11, 13)}
        assert reconstruct_x(cal) == x
        assert rational_umatrix(op, 17, 5).x == x_mod(x, 17, 2)


def test_calibration_rejects_denominator_prime():
    op = CalabiYauOperator.from_polys({1: [Fraction(1, 7), 0, 0, 0, 1]})
    with pytest.raises(ValueError):
        compute_U_series(op, 7, PadicContext(7, 4, 20), 0, 20)


def test_rational_reconstruction():
    M = 7 ** 6
    assert rational_reconstruction(-40 % M, M) == -40
    assert rational_reconstruction(3 * pow(8, -1, M) % M, M) == Fraction(3, 8)

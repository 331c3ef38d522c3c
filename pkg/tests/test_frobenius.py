from fractions import Fraction
from math import comb, factorial

import pytest

from eulerfactory.frobenius import FrobeniusSolver, build_E, log_form_residual, solve_frobenius
from eulerfactory.operator import CalabiYauOperator
from eulerfactory.padic import PadicContext
from eulerfactory.umatrix import auto_guard


def test_quintic_holomorphic_period(quintic):
    A = solve_frobenius(quintic, 30).A.coeffs
    assert A == [factorial(5 * n) // factorial(n) ** 5 for n in range(30)]


def test_apery_holomorphic_period(apery):
    A = solve_frobenius(apery, 25).A.coeffs
    want = [comb(2 * n, n) ** 2 * sum(comb(n, k) ** 2 * comb(n + k, k) for k in range(n + 1)) for n in range(25)]
    assert A == want


def test_theta4_basis_is_trivial():
    basis = solve_frobenius(CalabiYauOperator(((0, 0, 0, 0, 1),)), 10)
    assert basis.A.coeffs == [1] + [0] * 9
    for s in (basis.B, basis.C, basis.D):
        assert not any(s.coeffs)


@pytest.mark.parametrize("k", range(4))
def test_log_solutions_annihilated(quintic, apery, k):
    for op in (quintic, apery):
        assert log_form_residual(op, solve_frobenius(op, 25), k, 25) == {}


@pytest.mark.parametrize("p", [5, 7, 11])
def test_exact_and_padic_agree_to_50(quintic, p):
    exact = solve_frobenius(quintic, 50)
    padic = solve_frobenius(quintic, 50, PadicContext(p, 8, auto_guard(p, 50)))
    for e, s in zip(exact, padic):
        assert s.agrees_with(e.coeffs, 8)


def test_padic_loses_digits_at_multiples_of_p(quintic):
    solver = FrobeniusSolver(quintic, PadicContext(7, 4, 30))
    before = solver.digits
    solver.extend(8)
    assert before - solver.digits == 7


def test_E_at_zero_is_identity(quintic):
    E = build_E(solve_frobenius(quintic, 5))
    for i in range(4):
        for j in range(4):
            assert E[i][j].coeffs[0] == (1 if i == j else 0)


def test_E_bottom_right_includes_A(quintic):
    basis = solve_frobenius(quintic, 6)
    A, B, C, D = basis
    want = [d * n ** 3 + 3 * c * n ** 2 + 3 * b * n + a
            for n, (a, b, c, d) in enumerate(zip(A.coeffs, B.coeffs, C.coeffs, D.coeffs))]
    assert build_E(basis)[3][3].coeffs == [Fraction(w) for w in want]

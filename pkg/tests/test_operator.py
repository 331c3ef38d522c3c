from fractions import Fraction
from math import factorial

import pytest

from eulerfactory.operator import (CalabiYauOperator, NotMUMError, OperatorSyntaxError, discriminant,
                                   format_operator, parse_operator, to_ddt_form)

QUINTIC = """operator 1.1 degree 1
t^0: 1 0 0 0 0
t^1: -3125 -6250 -4375 -1250 -120
"""


def test_parse_quintic():
    op = parse_operator(QUINTIC)
    assert op.label == "1.1"
    assert op.degree_r == 1
    assert op.P(1) == tuple(Fraction(c) for c in (-120, -1250, -4375, -6250, -3125))


def test_format_round_trip(quintic, apery):
    for op in (quintic, apery):
        assert parse_operator(format_operator(op)) == op


def test_leading_line_normalized():
    op = parse_operator("operator x degree 1\nt^0: 2 0 0 0 0\nt^1: 2 0 0 0 4\n")
    assert op.P(1) == (2, 0, 0, 0, 1)


@pytest.mark.parametrize("text, line", [
    ("operator x degree 1\nt^0: 1 0 0 0\n", 2),
    ("operator x degree 1\nt^0: 1 0 0 0 0\nt^0: 1 0 0 0 0\n", 3),
    ("operator x degree 1\nt^0: 1 0 0 0 0\nt^2: 1 0 0 0 0\n", 3),
    ("operator x degree 1\nt^0: 1 0 0 0 0\nt^1: 1 a 0 0 0\n", 3),
    ("degree 1\n", 1),
])
def test_syntax_errors_locate_line(text, line):
    with pytest.raises(OperatorSyntaxError) as exc:
        parse_operator(text)
    assert exc.value.line == line


def test_not_mum():
    with pytest.raises(NotMUMError):
        parse_operator("operator x degree 1\nt^0: 1 0 1 0 0\nt^1: 1 0 0 0 0\n")
    with pytest.raises(NotMUMError):
        CalabiYauOperator(((0, 0, 0, 1, 0),))


def test_theta4_in_ddt_form():
    a = to_ddt_form(CalabiYauOperator(((0, 0, 0, 0, 1),)))
    assert a[4] == [0, 0, 0, 0, 1]
    assert a[3] == [0, 0, 0, 6]
    assert a[2] == [0, 0, 7]
    assert a[1] == [0, 1]


def _apply_ddt(a, n):
    """sum_k a_k(t) (d/dt)^k t^n as {exponent: coefficient}."""
    out = {}
    for k, poly in enumerate(a):
        if k > n:
            continue
        falling = factorial(n) // factorial(n - k)
        for i, c in enumerate(poly):
            if c and falling:
                e = n - k + i
                out[e] = out.get(e, 0) + c * falling
    return {e: c for e, c in out.items() if c}


@pytest.mark.parametrize("n", range(21))
def test_theta_and_ddt_forms_agree(quintic, apery, n):
    for op in (quintic, apery):
        a = to_ddt_form(op)
        want = {e: c for e, c in op.apply_to_monomial(n).items() if c}
        assert _apply_ddt(a, n) == want


def test_discriminants(quintic, apery):
    assert discriminant(quintic).poly == (1, -3125)
    d = discriminant(apery)
    assert d(0) == 1
    assert d.degree == 2
    assert discriminant(CalabiYauOperator(((0, 0, 0, 0, 1),))).poly == (1,)


def test_discriminant_primitive():
    op = CalabiYauOperator.from_polys({1: [0, 0, 0, 0, Fraction(-4, 6)]})
    assert discriminant(op).poly == (3, -2)

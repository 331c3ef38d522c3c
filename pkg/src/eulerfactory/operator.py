"""Calabi-Yau differential operators theta^4 + sum_i t^i P_i(theta)."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from math import gcd, lcm

from sympy.functions.combinatorial.numbers import stirling


class OperatorSyntaxError(ValueError):
    def __init__(self, message: str, line: int, column: int = 1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class NotMUMError(ValueError):
    """The t^0 part of the operator is not theta^4."""


@dataclass(frozen=True)
class CalabiYauOperator:
    """coeff[i][j] is the coefficient of t^i theta^j, 0 <= j <= 4."""

    coeff: tuple[tuple[Fraction, ...], ...]
    label: str = ""

    def __post_init__(self):
        rows = tuple(tuple(Fraction(c) for c in row) for row in self.coeff)
        if not rows or any(len(row) != 5 for row in rows):
            raise ValueError("each P_i needs exactly five coefficients (theta^0..theta^4)")
        if rows[0] != (0, 0, 0, 0, 1):
            raise NotMUMError("not a MUM-normalized operator")
        while len(rows) > 1 and not any(rows[-1]):
            rows = rows[:-1]
        object.__setattr__(self, "coeff", rows)

    @classmethod
    def from_polys(cls, polys: dict[int, list], label: str = "") -> "CalabiYauOperator":
        """Build from {i: [c0, c1, c2, c3, c4]} with P_i = sum_j c_j theta^j."""
        r = max(polys, default=0)
        rows = [[Fraction(0)] * 5 for _ in range(r + 1)]
        rows[0][4] = Fraction(1)
        for i, cs in polys.items():
            if i == 0:
                raise ValueError("the t^0 part is fixed to theta^4")
            cs = list(cs) + [0] * (5 - len(cs))
            rows[i] = [Fraction(c) for c in cs]
        return cls(tuple(map(tuple, rows)), label)

    @property
    def degree_r(self) -> int:
        return len(self.coeff) - 1

    def P(self, i: int) -> tuple[Fraction, ...]:
        """Coefficients of P_i(theta) in increasing powers of theta."""
        if i == 0 or i > self.degree_r:
            return (Fraction(0),) * 5
        return self.coeff[i]

    def denominators(self) -> int:
        return reduce(lcm, (c.denominator for row in self.coeff for c in row), 1)

    def apply_to_monomial(self, n: int) -> dict[int, Fraction]:
        """The operator applied to t^n, as {exponent: coefficient}."""
        out = {}
        for i, row in enumerate(self.coeff):
            c = sum(row[j] * n ** j for j in range(5))
            if c:
                out[n + i] = out.get(n + i, 0) + c
        return out


# -- file format ---------------------------------------------------------------

_HEADER = re.compile(r"operator\s+(\S+)\s+degree\s+(\d+)\s*$")
_LINE = re.compile(r"t\^(\d+)\s*:(.*)$")


def parse_operator(text: str) -> CalabiYauOperator:
    """Parse `operator <label> degree <r>` followed by `t^i: c4 c3 c2 c1 c0` lines."""
    label = None
    degree = None
    rows: dict[int, list[Fraction]] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if label is None:
            m = _HEADER.match(line)
            if not m:
                raise OperatorSyntaxError("expected header 'operator <label> degree <r>'", lineno)
            label, degree = m.group(1), int(m.group(2))
            continue
        m = _LINE.match(line)
        if not m:
            raise OperatorSyntaxError("expected 't^<i>: c4 c3 c2 c1 c0'", lineno)
        i = int(m.group(1))
        if i in rows:
            raise OperatorSyntaxError(f"duplicate line for t^{i}", lineno)
        if i > degree:
            raise OperatorSyntaxError(f"t^{i} exceeds declared degree {degree}", lineno)
        fields = m.group(2).split()
        if len(fields) != 5:
            col = raw.index(":") + 2
            raise OperatorSyntaxError(f"expected 5 coefficients, got {len(fields)}", lineno, col)
        coeffs = []
        for f in fields:
            try:
                coeffs.append(Fraction(f))
            except (ValueError, ZeroDivisionError):
                raise OperatorSyntaxError(f"bad rational {f!r}", lineno, raw.index(f) + 1) from None
        rows[i] = coeffs[::-1]
    if label is None:
        raise OperatorSyntaxError("empty operator file", 1)
    lead = rows.get(0, [Fraction(0)] * 5)
    if lead[4] != 0 and not any(lead[:4]):
        rows = {i: [c / lead[4] for c in row] for i, row in rows.items()}
    elif any(lead):
        raise NotMUMError("not a MUM-normalized operator")
    else:
        raise NotMUMError("not a MUM-normalized operator: t^0 part missing")
    table = [[Fraction(0)] * 5 for _ in range(degree + 1)]
    for i, row in rows.items():
        table[i] = row
    return CalabiYauOperator(tuple(map(tuple, table)), label)


def format_operator(op: CalabiYauOperator) -> str:
    lines = [f"operator {op.label or 'unnamed'} degree {op.degree_r}"]
    for i, row in enumerate(op.coeff):
        if any(row):
            lines.append(f"t^{i}: " + " ".join(str(c) for c in reversed(row)))
    return "\n".join(lines) + "\n"


def load_operator(path) -> CalabiYauOperator:
    with open(path, encoding="utf-8") as f:
        return parse_operator(f.read())


# -- d/dt form and discriminant ------------------------------------------------

def to_ddt_form(op: CalabiYauOperator) -> list[list[Fraction]]:
    """Polynomials a_0..a_4 with op = sum_k a_k(t) (d/dt)^k.

    Uses theta^k = sum_j S(k, j) t^j (d/dt)^j with Stirling numbers of the
    second kind. a_k is returned as coefficients in increasing powers of t.
    """
    deg = op.degree_r + 4
    a = [[Fraction(0)] * (deg + 1) for _ in range(5)]
    for i, row in enumerate(op.coeff):
        for k, c in enumerate(row):
            if not c:
                continue
            for j in range(k + 1):
                s = int(stirling(k, j))
                if s:
                    a[j][i + j] += c * s
    for poly in a:
        while len(poly) > 1 and poly[-1] == 0:
            poly.pop()
    return a


@dataclass(frozen=True)
class Discriminant:
    """Primitive integer polynomial, coefficients in increasing powers of t."""

    poly: tuple[int, ...] = field(default=(1,))

    @property
    def degree(self) -> int:
        return len(self.poly) - 1

    def __call__(self, t):
        r = 0
        for c in reversed(self.poly):
            r = r * t + c
        return r

    def __str__(self):
        terms = []
        for k, c in enumerate(self.poly):
            if c:
                terms.append(f"{c}" if k == 0 else f"{c}*t" if k == 1 else f"{c}*t^{k}")
        return " + ".join(terms).replace("+ -", "- ") or "0"


def discriminant(op: CalabiYauOperator) -> Discriminant:
    """Leading d/dt coefficient with t^4 removed, made primitive over Z.

    The sign is fixed by a positive constant term, so Delta(0) > 0.
    """
    a4 = to_ddt_form(op)[4]
    if any(a4[:4]):
        raise ArithmeticError("leading coefficient is not divisible by t^4")
    q = a4[4:]
    den = reduce(lcm, (c.denominator for c in q), 1)
    ints = [int(c * den) for c in q]
    content = reduce(gcd, ints)
    ints = [c // content for c in ints]
    if ints[0] < 0:
        ints = [-c for c in ints]
    return Discriminant(tuple(ints))

"""Frobenius basis A, B, C, D at the MUM point and the matrix E(t).

The basis comes from the epsilon-ansatz: f(t, eps) = sum_n a_n(eps) t^(n+eps)
with a_0 = 1 and

    (n + eps)^4 a_n(eps) = -sum_{i>=1} P_i(n - i + eps) a_{n-i}(eps)  mod eps^4,

so that A, B, C, D are the eps^0..eps^3 coefficients of sum_n a_n(eps) t^n and
f_k = [eps^k] t^eps sum_n a_n(eps) t^n.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb, factorial

from .operator import CalabiYauOperator
from .padic import PadicContext, PrecisionExhausted, TruncatedSeries, vp


class RationalSeries:
    """Exact power series over Q, the counterpart of TruncatedSeries."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        self.coeffs = [Fraction(c) for c in coeffs]

    @property
    def order(self) -> int:
        return len(self.coeffs)

    def __add__(self, other):
        n = min(self.order, other.order)
        return RationalSeries([a + b for a, b in zip(self.coeffs[:n], other.coeffs[:n])])

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return RationalSeries([c * other for c in self.coeffs])
        n = min(self.order, other.order)
        out = [Fraction(0)] * n
        for i, a in enumerate(self.coeffs[:n]):
            if a:
                for j in range(n - i):
                    out[i + j] += a * other.coeffs[j]
        return RationalSeries(out)

    __rmul__ = __mul__

    def theta(self, k: int = 1) -> "RationalSeries":
        return RationalSeries([c * n ** k for n, c in enumerate(self.coeffs)])

    def reduce(self, p: int, m: int) -> list[int]:
        mod = p ** m
        return [c.numerator * pow(c.denominator, -1, mod) % mod for c in self.coeffs]


@dataclass
class FrobeniusBasis:
    A: object
    B: object
    C: object
    D: object

    @property
    def order(self) -> int:
        return self.A.order

    def __iter__(self):
        return iter((self.A, self.B, self.C, self.D))


def _taylor(poly, base: int) -> list:
    """Coefficients of P(base + eps) up to eps^3."""
    return [sum(c * comb(j, k) * base ** (j - k) for j, c in enumerate(poly) if j >= k and c)
            for k in range(4)]


# (n + eps)^-4 = sum_k (-1)^k C(k+3, 3) n^(-4-k) eps^k
_INV4 = [(-1) ** k * comb(k + 3, 3) for k in range(4)]


class FrobeniusSolver:
    """Incremental solver; `extend(n)` reuses every coefficient already computed.

    Without a context it works over Q. With a PadicContext it stores p^V * a_n
    modulo p^digits and tracks the digits lost dividing by multiples of p.
    """

    def __init__(self, op: CalabiYauOperator, ctx: PadicContext | None = None, scale: int | None = None):
        self.op = op
        self.ctx = ctx
        self.polys = {i: op.P(i) for i in range(1, op.degree_r + 1) if any(op.P(i))}
        if ctx is None:
            self.a = [[Fraction(1), Fraction(0), Fraction(0), Fraction(0)]]
            return
        p = ctx.p
        if op.denominators() % p == 0:
            raise ValueError(f"p={p} divides a coefficient denominator of the operator")
        self.scale = 4 if scale is None else scale
        self.digits = ctx.digits + self.scale
        mod = p ** self.digits
        self.polys = {i: [c.numerator * pow(c.denominator, -1, mod) % mod for c in P]
                      for i, P in self.polys.items()}
        self.a = [[p ** self.scale % mod, 0, 0, 0]]

    @property
    def order(self) -> int:
        return len(self.a)

    def extend(self, n_max: int) -> None:
        if self.ctx is None:
            self._extend_exact(n_max)
        else:
            self._extend_padic(n_max)

    def _rhs(self, n: int) -> list:
        N = [0, 0, 0, 0]
        for i, P in self.polys.items():
            if n - i < 0:
                continue
            tay = _taylor(P, n - i)
            prev = self.a[n - i]
            for k1 in range(4):
                if tay[k1]:
                    for k2 in range(4 - k1):
                        N[k1 + k2] -= tay[k1] * prev[k2]
        return N

    def _extend_exact(self, n_max: int) -> None:
        for n in range(self.order, n_max):
            N = self._rhs(n)
            self.a.append([sum(N[j - k] * _INV4[k] * n ** (j - k) for k in range(j + 1)) / Fraction(n) ** (4 + j)
                           for j in range(4)])

    def _extend_padic(self, n_max: int) -> None:
        p = self.ctx.p
        for n in range(self.order, n_max):
            N = self._rhs(n)
            e = vp(n, p)
            u = n // p ** e
            if e:
                self.digits -= 7 * e
                if self.digits - self.scale < self.ctx.m:
                    raise PrecisionExhausted(f"p={p}: Frobenius recursion used up the guard digits at n={n}")
            mod = p ** self.digits
            row = []
            for j in range(4):
                # (n^(4+j)) * [eps^j] = sum_k N_{j-k} (-1)^k C(k+3,3) n^(j-k)
                s = sum(N[j - k] * _INV4[k] * n ** (j - k) for k in range(j + 1))
                d = p ** (e * (4 + j))
                s %= mod * d
                if s % d:
                    raise PrecisionExhausted(f"p={p}: denominator at n={n} exceeds scale {self.scale}")
                row.append(s // d * pow(u, -(4 + j), mod) % mod)
            self.a.append(row)
        mod = p ** self.digits
        for row in self.a:
            for j in range(4):
                row[j] %= mod

    def basis(self, n_max: int | None = None) -> FrobeniusBasis:
        n_max = self.order if n_max is None else n_max
        self.extend(n_max)
        cols = [[row[j] for row in self.a[:n_max]] for j in range(4)]
        if self.ctx is None:
            return FrobeniusBasis(*(RationalSeries(c) for c in cols))
        return FrobeniusBasis(*(TruncatedSeries(c, self.ctx, self.scale, self.digits).normalized()
                                for c in cols))


def solve_frobenius(op: CalabiYauOperator, n_max: int, ctx: PadicContext | None = None) -> FrobeniusBasis:
    """Frobenius basis to order n_max, exactly (ctx=None) or p-adically.

    In p-adic mode the scale for denominators starts small and doubles on demand.
    """
    if n_max < 1:
        raise ValueError("n_max must be positive")
    scale = 4
    while True:
        try:
            return FrobeniusSolver(op, ctx, scale).basis(n_max)
        except PrecisionExhausted as exc:
            if "denominator" not in str(exc) or ctx is None:
                raise
            scale *= 2


def build_E(basis: FrobeniusBasis) -> list[list]:
    """The 4x4 matrix whose row k holds [eps^k] of (theta + eps)^j applied to sum a_n(eps) t^n.

    Row k, column j is sum_i C(j, i) theta^(j-i) of the series i steps below
    in the chain A, B, C, D.
    """
    chain = list(basis)
    E = []
    for k in range(4):
        row = []
        for j in range(4):
            entry = None
            for i in range(min(j, k) + 1):
                term = chain[k - i].theta(j - i) * comb(j, i)
                entry = term if entry is None else entry + term
            row.append(entry)
        E.append(row)
    return E


def log_form_residual(op: CalabiYauOperator, basis: FrobeniusBasis, k: int, order: int) -> dict:
    """Apply the operator to f_k with log t kept as a formal symbol L.

    f_k = sum_{i<=k} L^(k-i)/(k-i)! * [A, B, C, D][i]. Returns the nonzero
    coefficients {(n, power of L): value} for n < order.
    """
    series = list(basis)
    terms: dict[tuple[int, int], Fraction] = {}
    for i in range(k + 1):
        for n, c in enumerate(series[i].coeffs[:order]):
            if c:
                key = (n, k - i)
                terms[key] = terms.get(key, 0) + Fraction(c) / factorial(k - i)

    def theta(ts):
        out: dict[tuple[int, int], Fraction] = {}
        for (n, l), c in ts.items():
            if n:
                out[(n, l)] = out.get((n, l), 0) + n * c
            if l:
                out[(n, l - 1)] = out.get((n, l - 1), 0) + l * c
        return out

    powers = [terms]
    for _ in range(4):
        powers.append(theta(powers[-1]))
    result: dict[tuple[int, int], Fraction] = {}
    for i, row in enumerate(op.coeff):
        for j, c in enumerate(row):
            if c:
                for (n, l), v in powers[j].items():
                    if n + i < order:
                        result[(n + i, l)] = result.get((n + i, l), 0) + c * v
    return {key: v for key, v in result.items() if v}

"""Arithmetic in Z/p^N: truncated power series with denominator tracking,
Teichmueller lifts and the p-adic zeta value at 3."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb, gcd

from sympy import bernoulli, isprime


class PrecisionExhausted(ArithmeticError):
    """Raised when the known p-adic digits of a result fall below the target."""


def vp(n: int, p: int) -> int:
    """p-adic valuation of a nonzero integer."""
    if n == 0:
        raise ValueError("valuation of zero")
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def vp_fraction(x: Fraction, p: int) -> int:
    return vp(x.numerator, p) - vp(x.denominator, p)


def reduce_fraction(x: Fraction, mod: int) -> int:
    """Image of a p-integral rational in Z/mod."""
    return x.numerator * pow(x.denominator, -1, mod) % mod


@dataclass(frozen=True)
class PadicContext:
    """Working precision: target exponent m plus g guard digits."""

    p: int
    m: int = 4
    g: int = 2

    def __post_init__(self):
        if not isprime(self.p):
            raise ValueError(f"{self.p} is not prime")
        if self.m < 1 or self.g < 0:
            raise ValueError("need m >= 1 and g >= 0")

    @property
    def digits(self) -> int:
        return self.m + self.g

    @property
    def modulus(self) -> int:
        return self.p ** (self.m + self.g)

    def with_guard(self, g: int) -> "PadicContext":
        return PadicContext(self.p, self.m, g)


# -- integer polynomial helpers ------------------------------------------------

def kronecker_mul(a: list[int], b: list[int], n: int | None = None) -> list[int]:
    """Product of two polynomials with nonnegative integer coefficients,
    truncated to n terms, by packing both into one big integer."""
    if not a or not b:
        return []
    length = len(a) + len(b) - 1
    if n is None or n > length:
        n = length
    a = a[:n]
    b = b[:n]
    bits = max(a).bit_length() + max(b).bit_length() + min(len(a), len(b)).bit_length() + 1
    w = (bits + 7) // 8
    pa = int.from_bytes(b"".join(c.to_bytes(w, "little") for c in a), "little")
    pb = int.from_bytes(b"".join(c.to_bytes(w, "little") for c in b), "little")
    raw = (pa * pb).to_bytes(w * (len(a) + len(b)), "little")
    return [int.from_bytes(raw[i * w:(i + 1) * w], "little") for i in range(n)]


def poly_mul_mod(a: list[int], b: list[int], mod: int, n: int | None = None) -> list[int]:
    """(a*b) mod `mod`, truncated to n terms; inputs may be any integers."""
    a = [c % mod for c in a]
    b = [c % mod for c in b]
    return [c % mod for c in kronecker_mul(a, b, n)]


def poly_pow_mod(a: list[int], e: int, mod: int, n: int | None = None) -> list[int]:
    result = [1 % mod]
    base = [c % mod for c in a]
    while e:
        if e & 1:
            result = poly_mul_mod(result, base, mod, n)
        e >>= 1
        if e:
            base = poly_mul_mod(base, base, mod, n)
    return result


def poly_eval_mod(a: list[int], x: int, mod: int) -> int:
    r = 0
    for c in reversed(a):
        r = (r * x + c) % mod
    return r


def series_inverse_mod(a: list[int], mod: int, n: int) -> list[int]:
    """Inverse of a power series with unit constant term, mod `mod`, to n terms."""
    inv0 = pow(a[0], -1, mod)
    g = [inv0]
    k = 1
    while k < n:
        k = min(2 * k, n)
        fg = poly_mul_mod(a[:k], g, mod, k)
        corr = [(-c) % mod for c in fg]
        corr[0] = (corr[0] + 2) % mod
        g = poly_mul_mod(g, corr, mod, k)
    return g[:n] + [0] * (n - len(g))


def last_nonzero(s: list[int]) -> int:
    """Index of the last nonzero entry, -1 for the zero series."""
    for i in range(len(s) - 1, -1, -1):
        if s[i]:
            return i
    return -1


# -- truncated series ----------------------------------------------------------

class TruncatedSeries:
    """Power series sum c_n t^n, n < order, over Z_p at finite precision.

    The true coefficient is coeffs[n] * p**(-v); the stored integers are known
    modulo p**digits, so the absolute precision is digits - v.
    """

    __slots__ = ("ctx", "coeffs", "v", "digits")

    def __init__(self, coeffs, ctx: PadicContext, v: int = 0, digits: int | None = None):
        self.ctx = ctx
        self.v = v
        self.digits = ctx.digits + v if digits is None else digits
        mod = ctx.p ** self.digits
        self.coeffs = [c % mod for c in coeffs]
        if self.digits - self.v < ctx.m:
            raise PrecisionExhausted(
                f"p={ctx.p}: absolute precision {self.digits - self.v} below target {ctx.m}")

    @classmethod
    def from_rationals(cls, values, ctx: PadicContext) -> "TruncatedSeries":
        p = ctx.p
        v = max([0] + [vp(x.denominator, p) for x in map(Fraction, values)])
        digits = ctx.digits + v
        mod = p ** digits
        coeffs = [reduce_fraction(Fraction(x) * p ** v, mod) for x in values]
        return cls(coeffs, ctx, v, digits)

    @property
    def order(self) -> int:
        return len(self.coeffs)

    @property
    def denominator_valuation(self) -> int:
        return self.v

    @property
    def precision(self) -> int:
        """Absolute p-adic precision of every true coefficient."""
        return self.digits - self.v

    def valuation(self) -> int:
        """Lower bound for the p-adic valuation of the true coefficients."""
        p = self.ctx.p
        g = gcd(*self.coeffs, p ** self.digits)
        return vp(g, p) - self.v

    def normalized(self) -> "TruncatedSeries":
        """Strip common powers of p from the stored coefficients."""
        p = self.ctx.p
        if self.v == 0:
            return self
        k = min(self.v, vp(gcd(*self.coeffs, p ** self.digits), p))
        if k == 0:
            return self
        q = p ** k
        return TruncatedSeries([c // q for c in self.coeffs], self.ctx, self.v - k, self.digits - k)

    def _aligned(self, other: "TruncatedSeries"):
        p = self.ctx.p
        v = max(self.v, other.v)
        a = [c * p ** (v - self.v) for c in self.coeffs]
        b = [c * p ** (v - other.v) for c in other.coeffs]
        prec = min(self.precision, other.precision)
        return a, b, v, prec

    def __add__(self, other):
        if isinstance(other, int):
            coeffs = list(self.coeffs)
            coeffs[0] += other * self.ctx.p ** self.v
            return TruncatedSeries(coeffs, self.ctx, self.v, self.digits)
        a, b, v, prec = self._aligned(other)
        n = min(self.order, other.order)
        return TruncatedSeries([x + y for x, y in zip(a[:n], b[:n])], self.ctx, v, prec + v).normalized()

    __radd__ = __add__

    def __neg__(self):
        return TruncatedSeries([-c for c in self.coeffs], self.ctx, self.v, self.digits)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Fraction):
            return self.scale_fraction(other)
        if isinstance(other, int):
            if other == 0:
                return TruncatedSeries([0] * self.order, self.ctx, 0, self.precision)
            k = vp(other, self.ctx.p)
            return TruncatedSeries([c * other for c in self.coeffs], self.ctx, self.v,
                                   self.digits + k).normalized()
        n = min(self.order, other.order)
        prec = min(self.precision + other.valuation(), other.precision + self.valuation())
        v = self.v + other.v
        coeffs = kronecker_mul(self.coeffs, other.coeffs, n)
        coeffs += [0] * (n - len(coeffs))
        return TruncatedSeries(coeffs, self.ctx, v, prec + v).normalized()

    __rmul__ = __mul__

    def scale_fraction(self, x: Fraction) -> "TruncatedSeries":
        """Multiply by a rational constant."""
        p = self.ctx.p
        e = vp(x.denominator, p)
        u = x.denominator // p ** e
        s = self * x.numerator
        uinv = pow(u, -1, p ** s.digits)
        return TruncatedSeries([c * uinv for c in s.coeffs], self.ctx, s.v + e, s.digits + e).normalized()

    def divide_by_p(self, e: int = 1) -> "TruncatedSeries":
        return TruncatedSeries(self.coeffs, self.ctx, self.v + e, self.digits + e)

    def truncate(self, n: int) -> "TruncatedSeries":
        return TruncatedSeries(self.coeffs[:n], self.ctx, self.v, self.digits)

    def theta(self, k: int = 1) -> "TruncatedSeries":
        """(t d/dt)^k applied coefficientwise."""
        if k == 0:
            return self
        return TruncatedSeries([c * n ** k for n, c in enumerate(self.coeffs)], self.ctx, self.v, self.digits)

    def compose_tp(self, k: int | None = None, order: int | None = None) -> "TruncatedSeries":
        """Substitute t -> t^k (k defaults to p)."""
        k = self.ctx.p if k is None else k
        n = self.order * k - (k - 1) if order is None else order
        out = [0] * n
        for i, c in enumerate(self.coeffs):
            if i * k >= n:
                break
            out[i * k] = c
        return TruncatedSeries(out, self.ctx, self.v, self.digits)

    def inverse(self) -> "TruncatedSeries":
        """Multiplicative inverse; the true constant term must be a p-adic unit."""
        p = self.ctx.p
        s = self.normalized()
        c0 = s.coeffs[0]
        if c0 % p ** s.v or (c0 // p ** s.v) % p == 0:
            raise ZeroDivisionError("constant term is not a p-adic unit")
        n = s.order
        g = TruncatedSeries([pow(c0 // p ** s.v, -1, p ** s.precision)], self.ctx, 0, s.precision)
        k = 1
        while k < n:
            k = min(2 * k, n)
            g = TruncatedSeries(g.coeffs + [0] * (k - g.order), self.ctx, g.v, g.digits)
            g = g * (2 - g * s.truncate(k))
        return g

    def residues(self, m: int | None = None) -> list[int]:
        """True coefficients mod p^m; they must be p-integral."""
        p = self.ctx.p
        m = self.ctx.m if m is None else m
        if m > self.precision:
            raise PrecisionExhausted(f"requested {m} digits, only {self.precision} known")
        s = self.normalized()
        if s.v:
            q = p ** s.v
            if any(c % q for c in s.coeffs):
                raise ArithmeticError("series is not p-adically integral")
            return [(c // q) % p ** m for c in s.coeffs]
        return [c % p ** m for c in s.coeffs]

    def agrees_with(self, values, m: int | None = None) -> bool:
        """True if every coefficient is congruent to the given rational mod p^m."""
        p = self.ctx.p
        m = self.ctx.m if m is None else m
        if m > self.precision:
            raise PrecisionExhausted(f"requested {m} digits, only {self.precision} known")
        mod = p ** (m + self.v)
        for c, x in zip(self.coeffs, values):
            x = Fraction(x) * p ** self.v
            if x.denominator % p == 0 or (c - reduce_fraction(x, mod)) % mod:
                return False
        return True

    def __repr__(self):
        return f"TruncatedSeries(p={self.ctx.p}, order={self.order}, v={self.v}, precision={self.precision})"


# -- Teichmueller lifts --------------------------------------------------------

def teichmueller(t0, ctx: PadicContext) -> int:
    """The (p-1)-th root of unity in Z/p^(m+g) congruent to t0 mod p."""
    p, mod = ctx.p, ctx.modulus
    t0 = Fraction(t0)
    if t0.numerator % p == 0 or t0.denominator % p == 0:
        raise ValueError(f"{t0} is not a {p}-adic unit")
    x = reduce_fraction(t0, mod)
    # x -> x^p converges: each step gains one digit
    for _ in range(ctx.digits + 1):
        y = pow(x, p, mod)
        if y == x:
            return x
        x = y
    return x


# -- zeta_p(3) -----------------------------------------------------------------

@lru_cache(maxsize=None)
def _bernoulli(j: int) -> Fraction:
    b = bernoulli(j)
    if j == 1:
        return Fraction(-1, 2)  # sympy >= 1.12 uses +1/2; the finite-sum formula wants -1/2
    return Fraction(int(b.p), int(b.q))


def zeta_p3(p: int, k: int, F: int | None = None) -> int:
    """Kubota-Leopoldt value L_p(3, omega^-2) modulo p^k.

    Uses the finite-sum formula
        L_p(s, chi) = 1/F * 1/(s-1) * sum_{p!|a<=F} chi(a) <a>^(1-s) sum_j binom(1-s, j) B_j (F/a)^j
    at s = 3, where chi(a)<a>^(-2) = a^(-2). F must be a multiple of p.
    """
    if k < 1:
        raise ValueError("need k >= 1")
    if p in (2, 3):
        raise ValueError("zeta_p(3) is only supported for p >= 5")
    if not isprime(p):
        raise ValueError(f"{p} is not prime")
    F = p if F is None else F
    if F % p:
        raise ValueError("F must be a multiple of p")
    # term j is (-1)^j (j+1) B_j F^(j-1) / 2 * sum a^(-2-j), of valuation >= (j-1) v_p(F) - 1
    vF = vp(F, p)
    jmax = -(-(k + 1) // vF) + 1
    work = p ** (k + 2 * vF + 4)
    total = Fraction(0)
    for j in range(jmax + 1):
        bj = _bernoulli(j)
        if bj == 0:
            continue
        s = sum(pow(a, -(2 + j), work) for a in range(1, F + 1) if a % p) % work
        total += Fraction((-1) ** j * (j + 1)) * bj * Fraction(F) ** (j - 1) / 2 * s
    if total and vp_fraction(total, p) < 0:
        raise ArithmeticError("zeta_p(3) sum is not p-integral")
    return reduce_fraction(total, p ** k)


def zeta_p3_kummer(p: int) -> int:
    """Residue of zeta_p(3) mod p via the Kummer congruence -B_{p-3}/(p-3)."""
    if p < 5:
        raise ValueError("need p >= 5")
    return reduce_fraction(-_bernoulli(p - 3) / (p - 3), p)

"""Euler factors from the evaluated Frobenius matrix, integer lifting under
the Weil bounds, batch sweeps over primes and the append-only factor store."""

from __future__ import annotations

import logging
import os
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, permutations
from math import isqrt

import mpmath
from sympy import primerange

from .frobenius import solve_frobenius
from .operator import CalabiYauOperator, Discriminant, discriminant
from .padic import PadicContext, PrecisionExhausted, reduce_fraction, teichmueller
from .umatrix import CalibrationError, StabilizationError, rational_umatrix

log = logging.getLogger(__name__)


class BadPrimeError(ValueError):
    """The requested prime is bad for (operator, t0)."""


class LiftAmbiguous(ArithmeticError):
    """More than one integer lift satisfies the Weil bounds."""


class LiftEmpty(ArithmeticError):
    """No integer lift satisfies the Weil bounds."""


class SymmetryViolation(ArithmeticError):
    """The characteristic polynomial lacks the c3 = c1 p^3, c4 = p^6 shape."""


@dataclass(frozen=True)
class EulerFactor:
    """1 + alpha T + beta p T^2 + alpha p^3 T^3 + p^6 T^4."""

    p: int
    alpha: int
    beta: int
    source: str = "computed"

    def coefficients(self) -> list[int]:
        p = self.p
        return [1, self.alpha, self.beta * p, self.alpha * p ** 3, p ** 6]

    def root_moduli_ok(self, tol: float = 1e-9) -> bool:
        return weil_roots_ok(self.coefficients(), self.p, tol)

    def within_bounds(self) -> bool:
        p = self.p
        return self.alpha ** 2 <= 16 * p ** 3 and abs(self.beta) <= 6 * p * p


@dataclass(frozen=True)
class BadEulerFactor:
    """Polynomial of degree <= 3 with constant term 1; coeffs[k] multiplies T^k."""

    p: int
    coeffs: tuple[int, ...]

    def __post_init__(self):
        if len(self.coeffs) > 4 or self.coeffs[0] != 1:
            raise ValueError("bad Euler factor needs degree <= 3 and constant term 1")

    def coefficients(self) -> list[int]:
        return list(self.coeffs)


# -- characteristic polynomial and lifting ---------------------------------------

def _det(M: list[list[int]]) -> int:
    n = len(M)
    if n == 0:
        return 1
    if n == 1:
        return M[0][0]
    total = 0
    for perm in permutations(range(n)):
        sign = 1
        seen = list(perm)
        for i in range(n):
            while seen[i] != i:
                j = seen[i]
                seen[i], seen[j] = seen[j], seen[i]
                sign = -sign
        prod = sign
        for i, j in enumerate(perm):
            prod *= M[i][j]
            if not prod:
                break
        total += prod
    return total


def charpoly_mod(U: list[list[int]], mod: int) -> list[int]:
    """Coefficients c_0..c_4 of det(1 - T U) mod `mod`, via principal minors."""
    out = [1]
    for k in range(1, 5):
        s = sum(_det([[U[i][j] for j in S] for i in S]) for S in combinations(range(4), k))
        out.append((-1) ** k * s % mod)
    return out


def weil_roots_ok(coeffs: list[int], p: int, tol: float = 1e-9) -> bool:
    """All complex reciprocal roots of sum c_k T^k have modulus p^(3/2) within tol."""
    with mpmath.workdps(40):
        # reciprocal roots are the roots of T^4 + c1 T^3 + c2 T^2 + c3 T + c4
        try:
            roots = mpmath.polyroots(coeffs, maxsteps=200, extraprec=200)
        except mpmath.libmp.NoConvergence:
            roots = mpmath.polyroots(coeffs, maxsteps=2000, extraprec=800)
        target = mpmath.mpf(p) ** mpmath.mpf(1.5)
        return all(abs(abs(r) / target - 1) <= tol for r in roots)


def _centered_lifts(residue: int, mod: int, bound: int) -> list[int]:
    """Integers x = residue mod `mod` with |x| <= bound."""
    r = residue % mod
    first = r - ((r + bound) // mod) * mod
    return list(range(first, bound + 1, mod))


def lift_coefficients(c1: int, c2: int, p: int, m: int) -> tuple[int, int]:
    """Integers (alpha, beta) with alpha = c1, beta p = c2 mod p^m inside the Weil box
    whose quartic passes the root-modulus test; exactly one must survive."""
    mod = p ** m
    if c2 % p:
        raise SymmetryViolation(f"p={p}: c2 = {c2} is not divisible by p")
    alpha_bound = isqrt(16 * p ** 3)
    candidates = []
    for alpha in _centered_lifts(c1, mod, alpha_bound):
        for beta in _centered_lifts(c2 // p, mod // p, 6 * p * p):
            if weil_roots_ok([1, alpha, beta * p, alpha * p ** 3, p ** 6], p):
                candidates.append((alpha, beta))
    if not candidates:
        raise LiftEmpty(f"p={p}: no lift of ({c1}, {c2}) mod {p}^{m} satisfies the Weil bounds")
    if len(candidates) > 1:
        raise LiftAmbiguous(f"p={p}: {len(candidates)} lifts mod {p}^{m}: {candidates}")
    return candidates[0]


# -- good primes and the factor at t0 ----------------------------------------------

def bad_reason(op: CalabiYauOperator, t0: Fraction, p: int, disc: Discriminant | None = None) -> str | None:
    """Why p cannot be used at t0, or None when p is good."""
    t0 = Fraction(t0)
    disc = disc or discriminant(op)
    if op.denominators() % p == 0:
        return "divides operator denominators"
    if t0.numerator % p == 0 or t0.denominator % p == 0:
        return "t0 is not a p-unit"
    if Fraction(disc(t0)).numerator % p == 0:
        return "discriminant vanishes mod p"
    return None


def auto_precision(p: int) -> int:
    if p >= 13:
        return 4
    if p in (7, 11):
        return 5
    return 6


def euler_factor_at(op: CalabiYauOperator, t0, p: int, m: int | None = None,
                    guard: int | None = None, max_m: int = 10,
                    disc: Discriminant | None = None) -> EulerFactor:
    """Euler factor of the motive at t0 for the good prime p.

    With m=None the precision follows auto_precision and escalates on ambiguity.
    """
    t0 = Fraction(t0)
    disc = disc or discriminant(op)
    reason = bad_reason(op, t0, p, disc)
    if reason:
        raise BadPrimeError(f"p={p} is bad at t={t0}: {reason}")
    auto = m is None
    m = auto_precision(p) if auto else m
    while True:
        R = rational_umatrix(op, p, m, guard=guard, disc=disc)
        mu = teichmueller(t0, PadicContext(p, m, 0))
        mod = p ** m
        c = charpoly_mod(R.evaluate(mu), mod)
        if (c[3] - c[1] * p ** 3) % mod or (c[4] - p ** 6) % mod:
            raise SymmetryViolation(f"p={p}: charpoly {c} mod {p}^{m} is not of Euler-factor shape")
        try:
            alpha, beta = lift_coefficients(c[1], c[2], p, m)
            return EulerFactor(p, alpha, beta)
        except LiftAmbiguous:
            if not auto or m >= max_m:
                raise
            log.info("p=%d: lift ambiguous at m=%d, escalating", p, m)
            m += 1


# -- Dwork congruence ----------------------------------------------------------------

def truncated_A(op: CalabiYauOperator, t0, p: int) -> int:
    """A_{<p}(t0) in F_p, from the holomorphic solution truncated below t^p."""
    A = solve_frobenius(op, p).A.coeffs
    t = reduce_fraction(Fraction(t0), p)
    return sum(reduce_fraction(a, p) * pow(t, n, p) for n, a in enumerate(A)) % p


def dwork_sign(op: CalabiYauOperator, t0, factors: list[EulerFactor]) -> int | None:
    """The sign s with alpha_p = s * A_{<p}(t0) mod p at every listed prime, if one exists."""
    signs = {1, -1}
    for f in factors:
        a = truncated_A(op, t0, f.p)
        signs = {s for s in signs if (f.alpha - s * a) % f.p == 0}
    if len(signs) == 1:
        return signs.pop()
    return None


# -- batches ---------------------------------------------------------------------------

@dataclass
class BatchResult:
    factors: list[EulerFactor] = field(default_factory=list)
    skipped: list[tuple[int, str]] = field(default_factory=list)
    errors: list[tuple[int, str]] = field(default_factory=list)


def _one(args):
    op, t0, p, m, guard = args
    try:
        return p, euler_factor_at(op, t0, p, m=m, guard=guard), None
    except (PrecisionExhausted, LiftAmbiguous, LiftEmpty, SymmetryViolation,
            CalibrationError, StabilizationError) as exc:
        return p, None, f"{type(exc).__name__}: {exc}"


def batch_compute(op: CalabiYauOperator, t0, primes, jobs: int = 1, m: int | None = None,
                  guard: int | None = None) -> BatchResult:
    """Euler factors for every good prime in `primes`, ordered by p."""
    t0 = Fraction(t0)
    disc = discriminant(op)
    result = BatchResult()
    todo = []
    for p in sorted(set(primes)):
        reason = bad_reason(op, t0, p, disc)
        if reason:
            result.skipped.append((p, reason))
        else:
            todo.append((op, t0, p, m, guard))
    if jobs > 1 and len(todo) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_one, todo))
    else:
        outcomes = [_one(a) for a in todo]
    for p, factor, err in sorted(outcomes, key=lambda o: o[0]):
        if err:
            result.errors.append((p, err))
        else:
            result.factors.append(factor)
    return result


def primes_upto(pmax: int) -> list[int]:
    return list(primerange(2, pmax + 1))


# -- text formats ------------------------------------------------------------------------

def _parse_int_expr(tok: str) -> int:
    """Integers written as products and powers, e.g. `3805*61` or `-61^4`."""
    sign = -1 if tok.startswith("-") else 1
    value = 1
    for factor in tok.lstrip("+-").split("*"):
        base, _, exp = factor.partition("^")
        value *= int(base) ** (int(exp) if exp else 1)
    return sign * value


def parse_bad_factors(text: str) -> dict[int, BadEulerFactor]:
    """Lines `p c3 c2 c1` for E_p = c3 T^3 + c2 T^2 + c1 T + 1."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 4:
            raise ValueError(f"line {lineno}: expected 'p c3 c2 c1'")
        try:
            p = int(parts[0])
            c3, c2, c1 = (_parse_int_expr(t) for t in parts[1:])
        except ValueError:
            raise ValueError(f"line {lineno}: malformed coefficient") from None
        coeffs = [1, c1, c2, c3]
        while len(coeffs) > 1 and coeffs[-1] == 0:
            coeffs.pop()
        out[p] = BadEulerFactor(p, tuple(coeffs))
    return out


def load_bad_factors(path) -> dict[int, BadEulerFactor]:
    with open(path, encoding="utf-8") as f:
        return parse_bad_factors(f.read())


_STORE_LINE = re.compile(r"^(\d+)\s+(.*)$")


@dataclass
class FactorTable:
    """Contents of a factor store or an imported table of [p, alpha, beta] rows."""

    meta: dict[str, str] = field(default_factory=dict)
    good: dict[int, EulerFactor] = field(default_factory=dict)
    bad: dict[int, BadEulerFactor] = field(default_factory=dict)
    skipped: dict[int, str] = field(default_factory=dict)


def parse_factor_table(text: str, source: str = "imported") -> FactorTable:
    table = FactorTable()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            words = line[1:].split()
            for key, value in zip(words[::2], words[1::2]):
                table.meta[key] = value
            continue
        m = _STORE_LINE.match(line)
        if not m:
            raise ValueError(f"line {lineno}: malformed entry {line!r}")
        p = int(m.group(1))
        rest = m.group(2).split()
        if rest[0] == "skip":
            table.skipped[p] = " ".join(rest[1:])
        elif rest[0] == "bad":
            table.bad[p] = BadEulerFactor(p, tuple(int(c) for c in rest[1:]))
        elif len(rest) == 2:
            table.good[p] = EulerFactor(p, int(rest[0]), int(rest[1]), source)
        else:
            raise ValueError(f"line {lineno}: malformed entry {line!r}")
    return table


def load_factor_table(path, source: str = "imported") -> FactorTable:
    with open(path, encoding="utf-8") as f:
        return parse_factor_table(f.read(), source)


class StoreMismatch(RuntimeError):
    """A recomputed value disagrees with the stored line."""


class FactorStore:
    """Append-only text file: `p alpha beta`, `p bad c0 c1 c2 c3`, `p skip <reason>`."""

    def __init__(self, path, header: dict[str, str] | None = None):
        self.path = path
        if os.path.exists(path):
            self.table = load_factor_table(path, source="computed")
        else:
            self.table = FactorTable()
            with open(path, "w", encoding="utf-8") as f:
                if header:
                    f.write("# " + " ".join(f"{k} {v}" for k, v in header.items()) + "\n")

    def known(self, p: int) -> bool:
        t = self.table
        return p in t.good or p in t.bad or p in t.skipped

    def _append(self, line: str) -> None:
        with open(self.path, "a", encoding="utf-8") as f:
            f.write(line + "\n")

    def record(self, factor: EulerFactor) -> bool:
        """Append a factor, or verify it against the stored one. True if appended."""
        old = self.table.good.get(factor.p)
        if old is not None:
            if (old.alpha, old.beta) != (factor.alpha, factor.beta):
                raise StoreMismatch(f"p={factor.p}: stored ({old.alpha}, {old.beta}), "
                                    f"computed ({factor.alpha}, {factor.beta})")
            return False
        self.table.good[factor.p] = factor
        self._append(f"{factor.p} {factor.alpha} {factor.beta}")
        return True

    def record_bad(self, factor: BadEulerFactor) -> bool:
        old = self.table.bad.get(factor.p)
        if old is not None:
            if old.coeffs != factor.coeffs:
                raise StoreMismatch(f"p={factor.p}: stored bad factor differs")
            return False
        self.table.bad[factor.p] = factor
        padded = list(factor.coeffs) + [0] * (4 - len(factor.coeffs))
        self._append(f"{factor.p} bad " + " ".join(map(str, padded)))
        return True

    def record_skip(self, p: int, reason: str) -> bool:
        if p in self.table.skipped:
            return False
        self.table.skipped[p] = reason
        self._append(f"{p} skip {reason.replace(' ', '-')}")
        return True

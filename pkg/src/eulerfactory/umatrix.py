"""The Frobenius matrix U_p(t) = E(t^p)^-1 U_p(0) E(t) and its rational form.

U_p(0) = diag(1, p, p^2, p^3) + p^3 x_p e_{41}. Because U depends affinely on
x_p, the series is stored as U(0) plus the direction p^3 M(t), where
M = col_4(E(t^p)^-1) * row_1(E(t)).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from math import isqrt

from .frobenius import FrobeniusSolver, build_E
from .operator import CalabiYauOperator, Discriminant, discriminant
from .padic import (PadicContext, PrecisionExhausted, TruncatedSeries, last_nonzero, poly_eval_mod,
                    poly_mul_mod, poly_pow_mod, series_inverse_mod, vp, zeta_p3)

log = logging.getLogger(__name__)


class CalibrationError(ArithmeticError):
    """No residue class of x_p makes the layers rational."""


class StabilizationError(ArithmeticError):
    """Denominator clearing did not stabilize within the order/delta budget."""


@dataclass(frozen=True)
class ULimitMatrix:
    p: int
    m: int
    x: int = 0

    def matrix(self) -> list[list[int]]:
        p = self.p
        U = [[p ** i if i == j else 0 for j in range(4)] for i in range(4)]
        U[3][0] = p ** 3 * self.x
        return U


# -- series matrices -------------------------------------------------------------

def _matmul(X, Y):
    out = []
    for i in range(4):
        row = []
        for j in range(4):
            acc = None
            for k in range(4):
                term = X[i][k] * Y[k][j]
                acc = term if acc is None else acc + term
            row.append(acc)
        out.append(row)
    return out


def _identity(ctx, order):
    return [[TruncatedSeries([1 if i == j else 0] + [0] * (order - 1), ctx) for j in range(4)]
            for i in range(4)]


def matrix_inverse(E, order: int):
    """Inverse of a series matrix with E(0) = I, by Newton iteration in t."""
    ctx = E[0][0].ctx
    X = _identity(ctx, 1)
    k = 1
    while k < order:
        k = min(2 * k, order)
        Ek = [[e.truncate(k) for e in row] for row in E]
        X = [[TruncatedSeries(x.coeffs + [0] * (k - x.order), ctx, x.v, x.digits) for x in row] for row in X]
        EX = _matmul(Ek, X)
        corr = [[(2 if i == j else 0) - EX[i][j] for j in range(4)] for i in range(4)]
        X = _matmul(X, corr)
    return X


def auto_guard(p: int, n_max: int) -> int:
    """Guard digits for the Frobenius recursion plus the inverse and product stages."""
    loss = 0
    q = p
    while q < n_max:
        loss += 7 * ((n_max - 1) // q)
        q *= p
    logn = 1
    while p ** logn < n_max:
        logn += 1
    return loss + 8 * logn + 16


@dataclass
class UMatrixSeries:
    """U_p(t) mod (p^m, t^order) for every x_p at once: U(x) = base + x * direction."""

    p: int
    m: int
    order: int
    base: list
    direction: list
    x: int = 0
    precision: int = 0

    def entries(self, x: int | None = None) -> list[list[list[int]]]:
        x = self.x if x is None else x
        mod = self.p ** self.m
        return [[[(b + x * d) % mod for b, d in zip(self.base[i][j], self.direction[i][j])]
                 for j in range(4)] for i in range(4)]

    def truncate(self, n: int) -> "UMatrixSeries":
        cut = lambda A: [[e[:n] for e in row] for row in A]
        return UMatrixSeries(self.p, self.m, n, cut(self.base), cut(self.direction), self.x, self.precision)


def compute_U_series(op: CalabiYauOperator, p: int, ctx: PadicContext, x: int, n_max: int,
                     solver: FrobeniusSolver | None = None) -> UMatrixSeries:
    """E(t^p)^-1 U_p(0) E(t) to order n_max, reduced mod p^m."""
    if op.denominators() % p == 0:
        raise ValueError(f"p={p} divides a coefficient denominator of the operator")
    solver = solver or FrobeniusSolver(op, ctx, scale=4)
    while True:
        try:
            basis = solver.basis(n_max)
            break
        except PrecisionExhausted as exc:
            if "denominator" not in str(exc):
                raise
            solver = FrobeniusSolver(op, ctx, scale=2 * solver.scale)
    E = build_E(basis)
    L = (n_max - 1) // p + 1
    X = matrix_inverse(E, L)
    Xp = [[e.compose_tp(p, n_max) for e in row] for row in X]
    U0E = [[E[i][j] * p ** i for j in range(4)] for i in range(4)]
    U = _matmul(Xp, U0E)
    D = [[Xp[i][3] * E[0][j] * p ** 3 for j in range(4)] for i in range(4)]
    m = ctx.m
    precision = min(s.precision for row in U + D for s in row)
    if precision < m:
        raise PrecisionExhausted(f"p={p}: U-matrix known to {precision} digits only")
    try:
        base = [[s.residues(m) for s in row] for row in U]
        direction = [[s.residues(m) for s in row] for row in D]
    except ArithmeticError as exc:
        raise ArithmeticError(f"p={p}: U-matrix is not p-integral to order {n_max}") from exc
    return UMatrixSeries(p, m, n_max, base, direction, x % p ** max(m - 3, 0), precision)


# -- rational form ---------------------------------------------------------------

@dataclass
class RationalUMatrix:
    """U_p(t) = sum_i p^i V_i(t) / Delta(t)^(p delta_i) mod p^m."""

    p: int
    m: int
    disc: Discriminant
    V: list = field(default_factory=list)
    delta: list = field(default_factory=list)
    degrees: list = field(default_factory=list)
    x: int = 0
    order: int = 0

    def expand(self, n: int) -> list[list[list[int]]]:
        """Re-expand as power series mod (p^m, t^n)."""
        p, m = self.p, self.m
        mod = p ** m
        total = [[[0] * n for _ in range(4)] for _ in range(4)]
        for i, (Vi, d) in enumerate(zip(self.V, self.delta)):
            inv = _inverse_delta_power(self.disc, p * d, mod, n)
            for a in range(4):
                for b in range(4):
                    s = poly_mul_mod(Vi[a][b], inv, mod, n)
                    for k, c in enumerate(s):
                        total[a][b][k] = (total[a][b][k] + p ** i * c) % mod
        return total

    def evaluate(self, mu: int) -> list[list[int]]:
        """Entries of U_p(mu) mod p^m, mu a Teichmueller representative."""
        p, m = self.p, self.m
        mod = p ** m
        dmu = poly_eval_mod(list(self.disc.poly), mu, mod)
        if dmu % p == 0:
            raise ZeroDivisionError(f"Delta vanishes mod {p} at the evaluation point")
        dinv = pow(dmu, -1, mod)
        out = [[0] * 4 for _ in range(4)]
        for i, (Vi, d) in enumerate(zip(self.V, self.delta)):
            scale = p ** i * pow(dinv, p * d, mod)
            for a in range(4):
                for b in range(4):
                    out[a][b] = (out[a][b] + scale * poly_eval_mod(Vi[a][b], mu, mod)) % mod
        return out

    def same_shape(self, other: "RationalUMatrix") -> bool:
        return self.delta == other.delta and self.V == other.V and self.x == other.x


_INV_CACHE: dict = {}


def _inverse_delta_power(disc: Discriminant, e: int, mod: int, n: int) -> list[int]:
    key = (disc.poly, e, mod, n)
    if key not in _INV_CACHE:
        _INV_CACHE[key] = series_inverse_mod(poly_pow_mod(list(disc.poly), e, mod, n), mod, n)
    return _INV_CACHE[key]


def _margin(p: int, disc: Discriminant) -> int:
    return p * max(disc.degree, 1) + 4 * max(disc.degree, 1) + 4


def _clear_digit(entries, disc: Discriminant, p: int, delta_max: int, margin: int):
    """Least delta with Delta^(p delta) * entries a polynomial mod p (tail of `margin` zeros)."""
    n = len(entries[0][0])
    best = None
    for delta in range(delta_max + 1):
        Dp = poly_pow_mod(list(disc.poly), p * delta, p, n)
        polys = [[poly_mul_mod(e, Dp, p, n) for e in row] for row in entries]
        d = max(last_nonzero(e) for row in polys for e in row)
        if n - 1 - d >= margin:
            return delta, [[e[:d + 1] if d >= 0 else [] for e in row] for row in polys], d
        best = d if best is None else min(best, d)
    raise StabilizationError(
        f"p={p}: no delta <= {delta_max} clears the layer at order {n}; smallest tail index {best}")


def _peel(residual, Vi, delta, disc, p, m_left):
    """(residual - Vi / Delta^(p delta)) / p mod p^(m_left - 1)."""
    n = len(residual[0][0])
    mod = p ** m_left
    inv = _inverse_delta_power(disc, p * delta, mod, n)
    out = []
    for a in range(4):
        row = []
        for b in range(4):
            s = poly_mul_mod(Vi[a][b], inv, mod, n) if Vi[a][b] else [0] * n
            s = s + [0] * (n - len(s))
            row.append([((r - c) % mod) // p for r, c in zip(residual[a][b], s)])
        out.append(row)
    return out


def _layers(entries, disc, p, m, delta_max, margin, upto=None):
    """Greedy p-adic layer splitting; stops before layer `upto` and returns its residual."""
    upto = m if upto is None else upto
    residual = entries
    V, delta, degrees = [], [], []
    for i in range(upto):
        digit = [[[c % p for c in e] for e in row] for row in residual]
        dl, polys, d = _clear_digit(digit, disc, p, delta_max, margin)
        V.append(polys)
        delta.append(dl)
        degrees.append(d)
        if i < m - 1:
            residual = _peel(residual, polys, dl, disc, p, m - i)
        else:
            residual = None
    return V, delta, degrees, residual


def calibrate_x(U: UMatrixSeries, disc: Discriminant, delta_max: int = 4) -> int:
    """The residue class x_p mod p^(m-3) for which every layer of U is rational.

    Each base-p digit of x_p shifts one layer affinely by a multiple of M mod p;
    the digit is the one that lets Delta^(p delta) cancel the tail of that layer.
    For operators where M itself is rational the digit is free and 0 is returned.
    """
    p, m = U.p, U.m
    margin = _margin(p, disc)
    n = U.order
    mdigit = [[[(c // p ** 3) % p for c in e] for e in row] for row in U.direction]
    x = 0
    for k in range(m - 3):
        layer = 3 + k
        _, _, _, residual = _layers(U.entries(x), disc, p, m, delta_max, margin, upto=layer)
        r = [[[c % p for c in e] for e in row] for row in residual]
        digit = None
        free = False
        for delta in range(delta_max + 1):
            Dp = poly_pow_mod(list(disc.poly), p * delta, p, n)
            a = [[poly_mul_mod(e, Dp, p, n) for e in row] for row in r]
            b = [[poly_mul_mod(e, Dp, p, n) for e in row] for row in mdigit]
            nb = max(last_nonzero(e) for row in b for e in row)
            if n - 1 - nb >= margin:
                na = max(last_nonzero(e) for row in a for e in row)
                if n - 1 - na >= margin:
                    free = True
                    digit = 0
                    break
                continue
            i, j = next((i, j) for i in range(4) for j in range(4) if b[i][j][nb])
            y = -a[i][j][nb] * pow(b[i][j][nb], -1, p) % p
            comb = [[[(s + y * t) % p for s, t in zip(a[i][j], b[i][j])] for j in range(4)] for i in range(4)]
            nc = max(last_nonzero(e) for row in comb for e in row)
            if n - 1 - nc >= margin:
                digit = y
                break
        if digit is None:
            raise CalibrationError(f"p={p}: no x digit makes layer {layer} rational at order {n}")
        if free:
            log.debug("p=%d: x digit %d is unconstrained", p, k)
        x += digit * p ** k
    return x


def clear_denominators(U: UMatrixSeries, disc: Discriminant, delta_max: int = 4) -> RationalUMatrix:
    """Greedy layer split of the calibrated U into V_i / Delta^(p delta_i)."""
    p, m = U.p, U.m
    V, delta, degrees, _ = _layers(U.entries(), disc, p, m, delta_max, _margin(p, disc))
    R = RationalUMatrix(p, m, disc, V, delta, degrees, U.x, U.order)
    if R.expand(U.order) != U.entries():
        raise StabilizationError(f"p={p}: rational form does not re-expand to U")
    return R


def initial_order(p: int, disc: Discriminant, delta_guess: int = 2) -> int:
    d = max(disc.degree, 1)
    return p * delta_guess * d + 8 * d


def rational_umatrix(op: CalabiYauOperator, p: int, m: int = 4, guard: int | None = None,
                     delta_max: int = 4, n_start: int | None = None, max_doublings: int = 4,
                     disc: Discriminant | None = None) -> RationalUMatrix:
    """Calibrate x_p and clear denominators, certified by re-running at a larger order."""
    disc = disc or discriminant(op)
    n = n_start or initial_order(p, disc)
    step = p * max(disc.degree, 1)
    last_error = None
    for _ in range(max_doublings + 1):
        n2 = n + step
        g = auto_guard(p, n2) if guard is None else guard
        ctx = PadicContext(p, m, g)
        try:
            U2 = compute_U_series(op, p, ctx, 0, n2)
            results = []
            for U in (U2.truncate(n), U2):
                U.x = calibrate_x(U, disc, delta_max)
                results.append(clear_denominators(U, disc, delta_max))
        except StabilizationError as exc:
            last_error = exc
        except CalibrationError as exc:
            last_error = exc
        else:
            R1, R2 = results
            if R1.same_shape(R2):
                return R2
            last_error = StabilizationError(f"p={p}: rational form changed between orders {n} and {n2}")
        log.debug("p=%d: no stable rational form at order %d (%s); doubling", p, n, last_error)
        n *= 2
    raise last_error


# -- the rational constant x -----------------------------------------------------

def rational_reconstruction(a: int, M: int) -> Fraction | None:
    """r/s = a mod M with |r|, s <= sqrt(M/2), or None."""
    bound = isqrt(M // 2)
    r0, r1 = M, a % M
    s0, s1 = 0, 1
    while r1 > bound:
        q = r0 // r1
        r0, r1 = r1, r0 - q * r1
        s0, s1 = s1, s0 - q * s1
    if s1 == 0 or abs(s1) > bound:
        return None
    x = Fraction(r1, s1)
    if (x.numerator - a * x.denominator) % M:
        return None
    return x


def reconstruct_x(calibrated: dict[int, tuple[int, int]]) -> Fraction | None:
    """Rational x with x * zeta_p(3) = x_p mod p^k for every (p -> (x_p, k)).

    Combines the classes by CRT and reconstructs; None when the bound fails.
    """
    residue, modulus = 0, 1
    for p, (xp, k) in sorted(calibrated.items()):
        if k < 1:
            continue
        mod = p ** k
        r = xp * pow(zeta_p3(p, k), -1, mod) % mod
        # CRT step
        t = (r - residue) * pow(modulus, -1, mod) % mod
        residue += modulus * t
        modulus *= mod
    if modulus == 1:
        return None
    return rational_reconstruction(residue, modulus)


def x_mod(x: Fraction, p: int, k: int) -> int:
    """x * zeta_p(3) mod p^k, the predicted calibration."""
    mod = p ** k
    if x.denominator % p == 0:
        raise ValueError(f"x has {p} in its denominator")
    return x.numerator * pow(x.denominator, -1, mod) * zeta_p3(p, k) % mod

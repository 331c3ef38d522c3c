"""Degree-4 weight-3 L-functions from Euler data and functional-equation residuals.

With gamma(s) = (N/pi^4)^(s/2) Gamma((s-1)/2) Gamma(s/2)^2 Gamma((s+1)/2) and
Lambda(s) = gamma(s) L(s), the theta series Theta(t) = sum a_n phi(n t), where phi
is the inverse Mellin transform of gamma, satisfies Theta(1/t) = eps t^4 Theta(t)
exactly when Lambda(s) = eps Lambda(4 - s). By Legendre duplication gamma(s) is
(N/pi^4)^(s/2) 2^(3-2s) pi Gamma(s-1) Gamma(s), whose inverse Mellin transform is
a K-Bessel function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product

import mpmath
import numpy as np
from scipy.optimize import least_squares

from .euler import BadEulerFactor, EulerFactor


class TailNotConverged(ArithmeticError):
    """The theta sums cannot reach the requested accuracy within the term budget."""


@dataclass
class LFunctionSpec:
    N: int
    epsilon: int
    good: dict[int, EulerFactor] = field(default_factory=dict)
    bad: dict[int, BadEulerFactor] = field(default_factory=dict)
    pmax: int | None = None

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("conductor must be positive")
        if self.epsilon not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        both = set(self.good) & set(self.bad)
        if both:
            raise ValueError(f"primes {sorted(both)} are both good and bad")
        if self.pmax is None:
            self.pmax = max([*self.good, *self.bad], default=1)
        missing = [p for p in _primes(self.pmax) if p not in self.good and p not in self.bad]
        if missing:
            raise ValueError(f"no Euler factor for primes {missing}")

    def restrict(self, pmax: int) -> "LFunctionSpec":
        """The partial Euler product using only primes up to pmax."""
        return LFunctionSpec(self.N, self.epsilon,
                             {p: f for p, f in self.good.items() if p <= pmax},
                             {p: f for p, f in self.bad.items() if p <= pmax}, pmax)

    def with_sign(self, epsilon: int, N: int | None = None) -> "LFunctionSpec":
        return LFunctionSpec(self.N if N is None else N, epsilon, self.good, self.bad, self.pmax)

    def local_polynomial(self, p: int) -> list[int] | None:
        f = self.good.get(p) or self.bad.get(p)
        return None if f is None else f.coefficients()


def _primes(n: int) -> list[int]:
    if n < 2:
        return []
    sieve = bytearray([1]) * (n + 1)
    sieve[0] = sieve[1] = 0
    for i in range(2, math.isqrt(n) + 1):
        if sieve[i]:
            sieve[i * i::i] = bytearray(len(range(i * i, n + 1, i)))
    return [i for i in range(n + 1) if sieve[i]]


def _smallest_prime_factors(n: int) -> list[int]:
    spf = list(range(n + 1))
    for i in range(2, math.isqrt(n) + 1):
        if spf[i] == i:
            for j in range(i * i, n + 1, i):
                if spf[j] == j:
                    spf[j] = i
    return spf


def inverse_series(coeffs: list[int], order: int) -> list[int]:
    """First `order` coefficients of 1 / sum c_k T^k for c_0 = 1."""
    if coeffs[0] != 1:
        raise ValueError("constant term must be 1")
    out = [1]
    for k in range(1, order):
        out.append(-sum(coeffs[j] * out[k - j] for j in range(1, min(k, len(coeffs) - 1) + 1)))
    return out


def dirichlet_coefficients(spec: LFunctionSpec, n_max: int) -> list[int]:
    """[a_0, a_1, ..., a_n_max] with a_0 = 0, from the partial Euler product over p <= pmax."""
    a = [0] * (n_max + 1)
    if n_max < 1:
        return a
    local: dict[int, list[int]] = {}
    for p in _primes(min(n_max, spec.pmax)):
        e = 0
        q = 1
        while q * p <= n_max:
            q *= p
            e += 1
        local[p] = inverse_series(spec.local_polynomial(p), e + 1)
    spf = _smallest_prime_factors(n_max)
    a[1] = 1
    for n in range(2, n_max + 1):
        p = spf[n]
        m, e = n, 0
        while m % p == 0:
            m //= p
            e += 1
        a[n] = local[p][e] * a[m] if p in local else 0
    return a


def divisor_d4(n: int) -> int:
    """Number of ordered factorizations n = abcd."""
    total = 1
    d = 2
    while d * d <= n:
        e = 0
        while n % d == 0:
            n //= d
            e += 1
        total *= math.comb(e + 3, 3)
        d += 1
    return total * (4 if n > 1 else 1)


@lru_cache(maxsize=None)
def _k1_nodes(prec: int, j: int):
    with mpmath.workprec(prec + 20):
        h = mpmath.mpf(2) ** -j
        cosh = []
        k = 0
        while not cosh or cosh[-1] < 1e4:
            cosh.append(mpmath.cosh(k * h))
            k += 1
        return h, cosh


def besselk1(z):
    """K_1(z) for z > 0 by the trapezoidal rule on int_0^inf exp(-z cosh u) cosh u du.

    The rule converges like exp(-pi^2/h) against a growth of exp(z) in the strip,
    so the step h = 2^-j is picked from z and the working precision; nodes are cached.
    """
    prec = mpmath.mp.prec
    need = prec * math.log(2) + float(z) + 10
    j = max(0, math.ceil(math.log2(need / math.pi ** 2)))
    h, cosh = _k1_nodes(prec, j)
    with mpmath.workprec(prec + 20):
        cut = prec * math.log(2) + 20
        s = mpmath.mpf(0.5)
        for c in cosh[1:]:
            a = z * (c - 1)
            if a > cut:
                break
            s += mpmath.exp(-a) * c
        return +(s * h * mpmath.exp(-z))


def gamma_kernel(x, N: int):
    """phi(x) = 8 N^(1/4) K_1(4 pi sqrt(x) / N^(1/4)) / sqrt(x)."""
    x = mpmath.mpf(x)
    if x <= 0:
        raise ValueError("kernel needs x > 0")
    q = mpmath.mpf(N) ** 0.25
    return 8 * q * besselk1(4 * mpmath.pi * mpmath.sqrt(x) / q) / mpmath.sqrt(x)


def gamma_factor(s, N: int):
    """(N/pi^4)^(s/2) Gamma((s-1)/2) Gamma(s/2)^2 Gamma((s+1)/2)."""
    return ((mpmath.mpf(N) / mpmath.pi ** 4) ** (s / 2) * mpmath.gamma((s - 1) / 2)
            * mpmath.gamma(s / 2) ** 2 * mpmath.gamma((s + 1) / 2))


def mellin_inverse_kernel(x, N: int, sigma: float = 2.0):
    """phi(x) by numerical inversion along Re s = sigma (reference for gamma_kernel)."""
    x = mpmath.mpf(x)

    def integrand(y):
        s = mpmath.mpc(sigma, y)
        return (gamma_factor(s, N) * x ** (-s)).real

    return mpmath.quad(integrand, [-mpmath.inf, -20, 0, 20, mpmath.inf]) / (2 * mpmath.pi)


def _tail_bound(N: int, t, start: int) -> float:
    """sum_{n >= start} d4(n) n^(3/2) phi(n t), a Ramanujan-type bound on the omitted terms."""
    total = mpmath.mpf(0)
    n = start
    while True:
        term = divisor_d4(n) * mpmath.mpf(n) ** 1.5 * gamma_kernel(n * t, N)
        total += term
        if n > start + 50 and term < total * mpmath.mpf(10) ** -6:
            return total
        n += 1


def choose_n_max(N: int, t_min, target, limit: int = 200000) -> int:
    """Smallest n_max (on a doubling grid then bisection) whose tail bound is below target."""
    with mpmath.workprec(64):
        hi = 16
        while _tail_bound(N, t_min, hi + 1) >= target:
            hi *= 2
            if hi > limit:
                raise TailNotConverged(f"tail bound above {target} beyond n = {limit}")
        lo = hi // 2
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if _tail_bound(N, t_min, mid + 1) < target:
                hi = mid
            else:
                lo = mid
        return hi


def theta(a: list[int], t, N: int):
    """Theta(t) = sum_n a_n phi(n t), summed in increasing n."""
    return mpmath.fsum(c * gamma_kernel(n * t, N) for n, c in enumerate(a) if c)


@dataclass(frozen=True)
class FeqResult:
    eta: float
    n_max: int
    residuals: tuple[float, ...]


def feq_residual(spec: LFunctionSpec, test_points=(1.05, 1.2), dps: int = 40,
                 n_max: int | None = None) -> FeqResult:
    """Relative functional-equation defect max_t |Theta(t) - eps t^-4 Theta(1/t)| / scale.

    The scale at each test point is max(|Theta(t)|, |t^-4 Theta(1/t)|), which makes
    eta independent of the overall size of the theta values.
    """
    with mpmath.workdps(dps):
        pts = [mpmath.mpf(t) for t in test_points]
        if any(t <= 0 for t in pts):
            raise ValueError("test points must be positive")
        t_min = min(min(t, 1 / t) for t in pts)
        if n_max is None:
            scale = abs(gamma_kernel(t_min, spec.N))
            n_max = choose_n_max(spec.N, t_min, scale * mpmath.mpf(10) ** (5 - dps))
        a = dirichlet_coefficients(spec, n_max)
        residuals = []
        for t in pts:
            lhs = theta(a, t, spec.N)
            rhs = spec.epsilon * theta(a, 1 / t, spec.N) / t ** 4
            denom = max(abs(lhs), abs(rhs))
            residuals.append(float(abs(lhs - rhs) / denom) if denom else 0.0)
    return FeqResult(max(residuals), n_max, tuple(residuals))


def check_feq(spec: LFunctionSpec, test_points=(1.05, 1.2), dps: int = 40) -> float:
    return feq_residual(spec, test_points, dps).eta


# -- precision curves and (N, eps) search --------------------------------------

@dataclass
class PrecisionCurve:
    N: int
    points: list[tuple[int, float]]
    fitted_c: float
    used: list[int]

    def lines(self) -> list[str]:
        return [f"{p} {eta:.6e}" for p, eta in self.points] + [f"fitted_c={self.fitted_c:.4f}"]


def fit_decay_constant(N: int, points: list[tuple[int, float]]) -> float:
    """c in log eta = -c N^(-1/4) sqrt(pmax), fitted with a soft-L1 loss in log space."""
    x = np.array([math.sqrt(p) / N ** 0.25 for p, _ in points])
    y = np.array([math.log(eta) for _, eta in points])
    c0 = float(-(x @ y) / (x @ x))
    fit = least_squares(lambda c: y + c[0] * x, [c0], loss="soft_l1", f_scale=1.0)
    return float(fit.x[0])


def precision_curve(spec, pmax_grid, test_points=(1.05, 1.2), dps: int = 40) -> PrecisionCurve:
    """eta(pmax) over the grid. `spec` is a full LFunctionSpec or a callable pmax -> spec.

    Points within 10^(8-dps) of the arithmetic floor are kept in the output but not fitted.
    """
    grid = list(pmax_grid)
    if len(grid) < 3:
        raise ValueError("a precision curve needs at least 3 grid points")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("pmax grid must be increasing")
    build = spec if callable(spec) else spec.restrict
    points = []
    N = None
    for pmax in grid:
        s = build(pmax)
        N = s.N
        points.append((pmax, check_feq(s, test_points, dps)))
    floor = 10.0 ** (8 - dps)
    usable = [(p, e) for p, e in points if e > floor]
    if len(usable) < 3:
        raise ValueError("fewer than 3 points above the precision floor")
    return PrecisionCurve(N, points, fit_decay_constant(N, usable), [p for p, _ in usable])


@dataclass(frozen=True)
class Candidate:
    eta: float
    N: int
    epsilon: int
    bad_index: int


def search_sign_conductor(good: dict[int, EulerFactor], candidate_N, candidate_bad,
                          test_points=(1.05, 1.2), dps: int = 40) -> list[Candidate]:
    """Evaluate every (N, eps, bad set) and rank by eta; ties keep grid order."""
    results = []
    for (N, eps), (i, bad) in product(product(candidate_N, (1, -1)), enumerate(candidate_bad)):
        spec = LFunctionSpec(N, eps, dict(good), dict(bad), _common_pmax(good, bad))
        results.append(Candidate(check_feq(spec, test_points, dps), N, eps, i))
    return sorted(results, key=lambda c: c.eta)


def _common_pmax(good, bad) -> int:
    """Largest pmax for which every smaller prime has a factor."""
    have = set(good) | set(bad)
    top = max(have, default=1)
    pmax = 1
    for p in _primes(top):
        if p not in have:
            break
        pmax = p
    return pmax

"""Factorization patterns of Euler factors mod l and l-congruence scans."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

from sympy import Poly, primerange, symbols

from .euler import EulerFactor

_T = symbols("T")


@dataclass(frozen=True, order=True)
class DecompositionType:
    """Multiset of (degree, multiplicity) pairs of the factorization over F_l."""

    parts: tuple[tuple[int, int], ...]

    @property
    def total_degree(self) -> int:
        return sum(d * e for d, e in self.parts)

    def degrees(self) -> tuple[int, ...]:
        """Degree partition with multiplicities expanded, e.g. (1, 1, 2)."""
        return tuple(sorted(d for d, e in self.parts for _ in range(e)))

    @property
    def reducible(self) -> bool:
        return self.degrees() != (self.total_degree,)

    @property
    def squarefree(self) -> bool:
        return all(e == 1 for _, e in self.parts)

    def render(self) -> str:
        return "(" + ",".join(str(d) if e == 1 else f"{d}^{e}" for d, e in sorted(self.parts)) + ")"

    def __str__(self):
        return self.render()


def factor_mod_l(factor, ell: int) -> tuple[DecompositionType, list[tuple[list[int], int]]]:
    """Irreducible factorization over F_l of an Euler factor or a coefficient list.

    Returns the decomposition type and the monic factors (coefficients in
    increasing degree) with multiplicities.
    """
    coeffs = factor.coefficients() if hasattr(factor, "coefficients") else list(factor)
    poly = Poly(list(reversed(coeffs)), _T, modulus=ell)
    _, factors = poly.factor_list()
    parts = []
    out = []
    for f, e in factors:
        parts.append((f.degree(), e))
        out.append(([int(c) % ell for c in reversed(f.all_coeffs())], e))
    return DecompositionType(tuple(sorted(parts))), out


def decomposition_type(factor: EulerFactor, ell: int) -> DecompositionType:
    return factor_mod_l(factor, ell)[0]


def _join(a: tuple[int, ...], b: tuple[int, ...]) -> tuple[int, ...]:
    """Finest degree partition that both a and b refine (join in the refinement order)."""
    # merge blocks until every block of a and of b sits inside a merged block:
    # model each partition as a set of subset sums and search for the common coarsening
    best = None
    for coarse in _partitions(sum(a)):
        if _refines(a, coarse) and _refines(b, coarse):
            if best is None or len(coarse) > len(best):
                best = coarse
    return best


def _partitions(n: int, largest: int | None = None):
    largest = n if largest is None else largest
    if n == 0:
        yield ()
        return
    for k in range(min(n, largest), 0, -1):
        for rest in _partitions(n - k, k):
            yield tuple(sorted((k,) + rest))


def _refines(fine: tuple[int, ...], coarse: tuple[int, ...]) -> bool:
    """Can the parts of `fine` be grouped to give exactly the parts of `coarse`?"""
    def place(items, bins):
        if not items:
            return all(b == 0 for b in bins)
        x, rest = items[0], items[1:]
        tried = set()
        for i, b in enumerate(bins):
            if b >= x and b not in tried:
                tried.add(b)
                if place(rest, bins[:i] + (b - x,) + bins[i + 1:]):
                    return True
        return False

    return place(tuple(sorted(fine, reverse=True)), tuple(coarse))


@dataclass(frozen=True)
class Congruence:
    ell: int
    type: DecompositionType
    exceptions: int
    primes: int

    def line(self) -> str:
        return f"l={self.ell} type={self.type.render()} exceptions={self.exceptions}"


def _render_degrees(degrees: tuple[int, ...]) -> DecompositionType:
    return DecompositionType(tuple((d, 1) for d in degrees))


def scan_congruences(factors: list[EulerFactor], ell_max: int = 50) -> dict[int, Congruence]:
    """l-congruences: primes l <= ell_max with E_p reducible mod l at every p != l.

    The reported type is the join of the per-prime degree partitions, i.e. the
    finest splitting pattern that every prime is consistent with. If that join
    is completely split, the most common full type (multiplicities included)
    is reported instead, ties going to the more squarefree one. `exceptions`
    counts the primes whose own type differs from the report.
    """
    if not factors:
        raise ValueError("no Euler factors supplied")
    report = {}
    for ell in primerange(2, ell_max + 1):
        types = [decomposition_type(f, ell) for f in factors if f.p != ell]
        if not types or not all(t.reducible for t in types):
            continue
        joined = types[0].degrees()
        for t in types[1:]:
            joined = _join(joined, t.degrees())
        if joined == (4,):
            continue
        if joined == (1, 1, 1, 1):
            counts = Counter(types)
            chosen = max(counts, key=lambda t: (counts[t], len(t.parts), t.parts))
            exceptions = sum(1 for t in types if t != chosen)
        else:
            chosen = _render_degrees(joined)
            exceptions = sum(1 for t in types if t.degrees() != joined)
        report[ell] = Congruence(ell, chosen, exceptions, len(types))
    return report

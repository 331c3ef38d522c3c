"""Paramodular Hecke-eigenvalue tables and matching of Euler data against them."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable

from .euler import EulerFactor

log = logging.getLogger(__name__)

HEADER = ["label", "conductor", "p", "a_p", "b_p"]


class DatabaseError(ValueError):
    """The eigenvalue file is unusable as a whole."""


@dataclass
class ParamodularRecord:
    label: str
    conductor: int
    a_p: dict[int, int] = field(default_factory=dict)
    b_p: dict[int, int] = field(default_factory=dict)


def conductor_from_label(label: str) -> int | None:
    """Third dot-field of labels like 2.K.61.3.0.a.a, if it is an integer."""
    parts = label.split(".")
    if len(parts) >= 3 and parts[2].isdigit():
        return int(parts[2])
    return None


def ingest_database(path) -> list[ParamodularRecord]:
    """Read the long-format CSV (one row per label and prime).

    Malformed rows are logged and skipped. A file with no valid rows is an error.
    """
    records: dict[str, ParamodularRecord] = {}
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames is None:
            raise DatabaseError(f"{path}: empty file")
        missing = [h for h in HEADER[:4] if h not in reader.fieldnames]
        if missing:
            raise DatabaseError(f"{path}: missing columns {missing}")
        for lineno, row in enumerate(reader, 2):
            try:
                label = row["label"].strip()
                conductor = int(row["conductor"])
                p = int(row["p"])
                a = int(row["a_p"])
                b_raw = (row.get("b_p") or "").strip()
                b = int(b_raw) if b_raw else None
            except (TypeError, ValueError, AttributeError):
                log.warning("%s:%d: skipping malformed row %r", path, lineno, row)
                continue
            implied = conductor_from_label(label)
            if implied is not None and implied != conductor:
                log.warning("%s:%d: conductor %d disagrees with label %s", path, lineno, conductor, label)
                continue
            rec = records.setdefault(label, ParamodularRecord(label, conductor))
            if rec.conductor != conductor:
                log.warning("%s:%d: conductor changes within label %s", path, lineno, label)
                continue
            rec.a_p[p] = a
            if b is not None:
                rec.b_p[p] = b
    if not records:
        raise DatabaseError(f"{path}: no valid rows")
    return list(records.values())


def write_database(path, records: Iterable[ParamodularRecord]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(HEADER)
        for rec in records:
            for p in sorted(rec.a_p):
                w.writerow([rec.label, rec.conductor, p, rec.a_p[p], rec.b_p.get(p, "")])


@dataclass(frozen=True)
class MatchResult:
    label: str
    conductor: int
    sign: int
    agreements: int
    primes: int
    bp_agreements: int | None = None

    @property
    def full(self) -> bool:
        return self.agreements == self.primes

    def collision_bound(self, database_size: int, primes: Iterable[int]) -> float:
        """Chance that some unrelated record agrees at all primes, if a_p were uniform in the Weil range."""
        log_prob = sum(-math.log(2 * math.floor(4 * p ** 1.5) + 1) for p in primes)
        return min(1.0, database_size * math.exp(log_prob))


POLICIES = ("exact", "sign")


def match(factors: Iterable[EulerFactor], records: list[ParamodularRecord],
          prime_set: Iterable[int] | None = None, policy: str = "exact",
          bp_normalization: Callable[[int, int], int] | None = None) -> list[MatchResult]:
    """Rank records by agreement of alpha_p with a_p over the effective prime set.

    The effective set of a record is prime_set restricted to the primes present
    in both the factors and the record. Policy "sign" also accepts alpha_p = -a_p
    at every prime (one global sign). With `bp_normalization(p, beta)` giving
    the expected b_p, b_p agreements are counted too.
    """
    if policy not in POLICIES:
        raise ValueError(f"unknown policy {policy!r}")
    alpha = {f.p: f for f in factors}
    wanted = set(alpha) if prime_set is None else set(prime_set) & set(alpha)
    if not wanted:
        raise ValueError("effective prime set is empty")
    results = []
    for rec in records:
        primes = sorted(wanted & set(rec.a_p))
        if not primes:
            continue
        signs = (1, -1) if policy == "sign" else (1,)
        best = None
        for s in signs:
            agree = sum(1 for p in primes if alpha[p].alpha == s * rec.a_p[p])
            if best is None or agree > best[1]:
                best = (s, agree)
        bp = None
        if bp_normalization is not None:
            bp = sum(1 for p in primes if p in rec.b_p
                     and bp_normalization(p, alpha[p].beta) == rec.b_p[p])
        results.append(MatchResult(rec.label, rec.conductor, best[0], best[1], len(primes), bp))
    results.sort(key=lambda r: (-int(r.full), -r.agreements / r.primes, -r.primes, r.label))
    return results


def full_matches(results: list[MatchResult]) -> list[MatchResult]:
    return [r for r in results if r.full]

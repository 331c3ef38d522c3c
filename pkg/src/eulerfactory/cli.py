"""Command-line driver: eulerfactory {compute,checkfeq,curve,scan,match,calibrate}."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from fractions import Fraction

from .congruence import scan_congruences
from .euler import (FactorStore, LiftAmbiguous, LiftEmpty, StoreMismatch, SymmetryViolation, bad_reason,
                    batch_compute, load_bad_factors, load_factor_table, primes_upto)
from .lfunction import LFunctionSpec, feq_residual, precision_curve, search_sign_conductor
from .matching import DatabaseError, full_matches, ingest_database, match
from .operator import NotMUMError, OperatorSyntaxError, discriminant, load_operator
from .padic import PrecisionExhausted
from .umatrix import CalibrationError, StabilizationError, rational_umatrix, reconstruct_x, x_mod

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_PRECISION = 3
EXIT_STORE = 4
EXIT_VERIFY = 5


def _rational(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from None


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated integer list: {text!r}") from None


def store_path(out_dir: str, label: str, t0: Fraction) -> str:
    t = str(t0).replace("/", "_")
    return os.path.join(out_dir, f"{label or 'operator'}_t{t}.txt")


# -- data sources ---------------------------------------------------------------------

def _compute_into_store(args, op, out) -> tuple[FactorStore, int, int, list[tuple[int, str]]]:
    """Fill the store for primes <= pmax. Returns (store, verified, new, errors)."""
    if args.t == 0:
        raise ValueError("t must be nonzero")
    os.makedirs(args.out, exist_ok=True)
    path = store_path(args.out, op.label, args.t)
    store = FactorStore(path, {"operator": op.label or "operator", "t": str(args.t)})
    bad = load_bad_factors(args.bad) if args.bad else {}
    primes = primes_upto(args.pmax)
    if not primes:
        raise ValueError("prime range is empty")
    disc = discriminant(op)
    good = [p for p in primes if not bad_reason(op, args.t, p, disc)]
    # stored primes are recomputed too and checked against their lines
    result = batch_compute(op, args.t, good, jobs=args.jobs, m=args.precision, guard=args.guard)
    verified = new = 0
    for f in result.factors:
        if store.record(f):
            new += 1
        else:
            verified += 1
    for p in primes:
        reason = bad_reason(op, args.t, p, disc)
        if reason:
            store.record_skip(p, reason)
            if p in bad:
                store.record_bad(bad[p])
    print(f"wrote {path}", file=out)
    return store, verified, new, result.errors


def _factor_table(args):
    """Good and bad factors from --factors (plus --bad), or by computing from --operator."""
    if args.factors:
        table = load_factor_table(args.factors)
    elif getattr(args, "operator", None) and args.t is not None:
        op = load_operator(args.operator)
        store, _, _, errors = _compute_into_store(args, op, sys.stderr)
        if errors:
            raise PrecisionExhausted("; ".join(f"p={p}: {e}" for p, e in errors))
        table = store.table
    else:
        raise ValueError("need --factors FILE or --operator FILE --t RAT")
    if args.bad:
        for p, f in load_bad_factors(args.bad).items():
            table.bad[p] = f
    return table


def _spec(table, pmax: int, N: int, eps: int) -> LFunctionSpec:
    good = {p: f for p, f in table.good.items() if p <= pmax}
    bad = {p: f for p, f in table.bad.items() if p <= pmax}
    return LFunctionSpec(N, eps, good, bad, pmax)


def _pmax(args, table) -> int:
    if args.pmax:
        return args.pmax
    return max([*table.good, *table.bad])


# -- commands ---------------------------------------------------------------------------

def cmd_compute(args, out=None) -> int:
    out = out or sys.stdout
    op = load_operator(args.operator)
    _, verified, new, errors = _compute_into_store(args, op, out)
    print(f"verified {verified} entries, {new} recomputed", file=out)
    for p, err in errors:
        print(f"p={p} failed: {err}", file=out)
    return EXIT_PRECISION if errors else EXIT_OK


def _signs(eps: str) -> list[int]:
    return {"+": [1], "-": [-1], "auto": [1, -1]}[eps]


def cmd_checkfeq(args, out=None) -> int:
    out = out or sys.stdout
    table = _factor_table(args)
    pmax = _pmax(args, table)
    if args.conductor is None:
        raise ValueError("--conductor is required")
    good = {p: f for p, f in table.good.items() if p <= pmax}
    bad = {p: f for p, f in table.bad.items() if p <= pmax}
    if len(args.conductor) == 1 and args.eps != "auto":
        spec = _spec(table, pmax, args.conductor[0], _signs(args.eps)[0])
        r = feq_residual(spec, dps=args.dps)
        print(f"N={spec.N} eps={spec.epsilon:+d} pmax={pmax} eta={r.eta:.6e} n_max={r.n_max}", file=out)
        best = r.eta
    else:
        ranking = [c for c in search_sign_conductor(good, args.conductor, [bad], dps=args.dps)
                   if c.epsilon in _signs(args.eps)]
        for c in ranking:
            print(f"N={c.N} eps={c.epsilon:+d} pmax={pmax} eta={c.eta:.6e}", file=out)
        best = ranking[0].eta
    return EXIT_OK if best <= args.threshold else EXIT_VERIFY


def cmd_curve(args, out=None) -> int:
    out = out or sys.stdout
    table = _factor_table(args)
    if args.conductor is None or len(args.conductor) != 1:
        raise ValueError("--conductor takes exactly one value here")
    eps = _signs(args.eps)
    if len(eps) != 1:
        raise ValueError("--eps must be + or - for a precision curve")
    N = args.conductor[0]
    curve = precision_curve(lambda pmax: _spec(table, pmax, N, eps[0]), args.grid, dps=args.dps)
    for line in curve.lines():
        print(line, file=out)
    return EXIT_OK


def cmd_scan(args, out=None) -> int:
    out = out or sys.stdout
    table = _factor_table(args)
    pmax = _pmax(args, table)
    factors = [f for p, f in sorted(table.good.items()) if p <= pmax]
    for c in scan_congruences(factors, args.ell_max).values():
        print(c.line(), file=out)
    return EXIT_OK


def cmd_match(args, out=None) -> int:
    out = out or sys.stdout
    table = _factor_table(args)
    pmax = _pmax(args, table)
    factors = [f for p, f in sorted(table.good.items()) if p <= pmax]
    try:
        records = ingest_database(args.db)
    except DatabaseError as exc:
        print(f"no candidates: {exc}", file=out)
        return EXIT_VERIFY
    norm = None
    if args.compare_bp:
        scale, offset = args.compare_bp
        norm = lambda p, beta: scale * beta + offset  # noqa: E731
    results = match(factors, records, policy=args.policy, bp_normalization=norm)
    hits = full_matches(results)
    if not hits:
        print("no candidates", file=out)
        return EXIT_VERIFY
    for r in hits:
        primes = [f.p for f in factors if f.p in next(x for x in records if x.label == r.label).a_p]
        extra = "" if r.bp_agreements is None else f" b_p={r.bp_agreements}/{r.primes}"
        print(f"{r.label} agreements={r.agreements}/{r.primes} sign={r.sign:+d}{extra} "
              f"collision<={r.collision_bound(len(records), primes):.1e}", file=out)
    return EXIT_OK


def cmd_calibrate(args, out=None) -> int:
    out = out or sys.stdout
    op = load_operator(args.operator)
    m = args.precision or 5
    if m < 4:
        raise ValueError("calibration needs --precision >= 4")
    disc = discriminant(op)
    primes = [p for p in primes_upto(args.pmax) if p >= 7 and op.denominators() % p
              and discriminant_leading_unit(disc, p)]
    calibrated = {}
    x = None
    consistent = True
    for p in primes:
        R = rational_umatrix(op, p, m, guard=args.guard, disc=disc)
        k = m - 3
        if x is not None and x.denominator % p and x_mod(x, p, k) != R.x % p ** k:
            consistent = False
        calibrated[p] = (R.x, k)
        print(f"p={p} x_p={R.x} delta={','.join(map(str, R.delta))}", file=out)
        if len(calibrated) >= 3:
            x = reconstruct_x(calibrated)
    print(f"x={x}" if x is not None else "x=unresolved", file=out)
    return EXIT_OK if consistent and x is not None else EXIT_VERIFY


def discriminant_leading_unit(disc, p: int) -> bool:
    """Delta has a p-unit leading coefficient, so its degree does not drop mod p."""
    return disc.poly[-1] % p != 0


# -- argument parsing -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eulerfactory",
                                     description="Euler factors of Calabi-Yau operators and their L-functions")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, operator=True):
        if operator:
            sp.add_argument("--operator", metavar="FILE")
            sp.add_argument("--t", type=_rational, metavar="RAT")
        sp.add_argument("--pmax", type=int, metavar="N")
        sp.add_argument("--precision", type=int, metavar="M", help="p-adic precision m (default: automatic)")
        sp.add_argument("--guard", type=int, metavar="G", help="guard digits (default: automatic)")
        sp.add_argument("--jobs", type=int, default=1, metavar="J")
        sp.add_argument("--out", default=".", metavar="DIR")
        sp.add_argument("--bad", metavar="FILE", help="bad Euler factors, lines 'p c3 c2 c1'")

    def lfun(sp):
        sp.add_argument("--factors", metavar="FILE", help="factor table or store instead of computing")
        sp.add_argument("--conductor", type=_int_list, metavar="N[,N...]")
        sp.add_argument("--eps", choices=["+", "-", "auto"], default="auto")
        sp.add_argument("--dps", type=int, default=40, help="decimal working precision")

    sp = sub.add_parser("compute", help="compute and store Euler factors")
    common(sp)
    sp.set_defaults(func=cmd_compute)

    sp = sub.add_parser("checkfeq", help="functional-equation residual")
    common(sp)
    lfun(sp)
    sp.add_argument("--threshold", type=float, default=1e-10)
    sp.set_defaults(func=cmd_checkfeq)

    sp = sub.add_parser("curve", help="precision curve eta(pmax) and fitted c")
    common(sp)
    lfun(sp)
    sp.add_argument("--grid", type=_int_list, default=[29, 61, 97, 149, 199])
    sp.set_defaults(func=cmd_curve)

    sp = sub.add_parser("scan", help="l-congruence scan")
    common(sp)
    sp.add_argument("--factors", metavar="FILE")
    sp.add_argument("--ell-max", type=int, default=50)
    sp.set_defaults(func=cmd_scan)

    sp = sub.add_parser("match", help="match against a Hecke-eigenvalue CSV")
    common(sp)
    sp.add_argument("--factors", metavar="FILE")
    sp.add_argument("--db", required=True, metavar="FILE")
    sp.add_argument("--policy", choices=["exact", "sign"], default="exact")
    sp.add_argument("--compare-bp", type=_int_list, metavar="SCALE,OFFSET",
                    help="also compare b_p = SCALE*beta_p + OFFSET")
    sp.set_defaults(func=cmd_match)

    sp = sub.add_parser("calibrate", help="calibrate x_p per prime and reconstruct x")
    common(sp)
    sp.set_defaults(func=cmd_calibrate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "compare_bp", None) is not None and len(args.compare_bp) != 2:
        parser.error("--compare-bp takes SCALE,OFFSET")
    if args.command in ("compute", "calibrate") and (not args.operator or not args.pmax):
        parser.error(f"{args.command} needs --operator and --pmax")
    if args.command == "compute" and args.t is None:
        parser.error("compute needs --t")
    try:
        return args.func(args)
    except StoreMismatch as exc:
        print(f"store mismatch: {exc}", file=sys.stderr)
        return EXIT_STORE
    except (PrecisionExhausted, LiftAmbiguous, LiftEmpty, SymmetryViolation,
            CalibrationError, StabilizationError) as exc:
        print(f"precision: {exc}", file=sys.stderr)
        return EXIT_PRECISION
    except (OSError, OperatorSyntaxError, NotMUMError, DatabaseError, ValueError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())

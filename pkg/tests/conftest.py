from pathlib import Path

import pytest

from eulerfactory.euler import batch_compute, load_bad_factors, load_factor_table, primes_upto
from eulerfactory.lfunction import LFunctionSpec
from eulerfactory.operator import load_operator

DATA = Path(__file__).resolve().parents[1] / "src" / "eulerfactory" / "data"
FIXTURES = Path(__file__).resolve().parent / "fixtures"

# (operator label, t0, table label); the tables list the factors at these parameters
GOLDEN = [("1.1", 1, "1562"), ("2.5", -1, "79"), ("2.5", 1, "431")]


def operator(label):
    return load_operator(DATA / "operators" / f"{label}.op")


def table(label):
    return load_factor_table(DATA / f"table_{label}.txt")


def bad(label):
    return load_bad_factors(DATA / f"bad_{label}.txt")


def lspec(label, N, eps, pmax):
    t = table(label)
    b = bad(label)
    return LFunctionSpec(N, eps, {p: f for p, f in t.good.items() if p <= pmax},
                         {p: f for p, f in b.items() if p <= pmax}, pmax)


_BATCHES = {}


def computed(op_label, t0, pmax=97):
    """Euler factors computed once per session for a golden (operator, t0)."""
    key = (op_label, t0, pmax)
    if key not in _BATCHES:
        _BATCHES[key] = batch_compute(operator(op_label), t0, primes_upto(pmax))
    return _BATCHES[key]


@pytest.fixture(scope="session")
def quintic():
    return operator("1.1")


@pytest.fixture(scope="session")
def apery():
    return operator("2.5")


# -- acceptance summary ------------------------------------------------------------

ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)

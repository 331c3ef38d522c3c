import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from conftest import GOLDEN, DATA, computed, operator, table
from eulerfactory.euler import (BadEulerFactor, EulerFactor, FactorStore, LiftAmbiguous, StoreMismatch,
                                auto_precision, bad_reason, dwork_sign, euler_factor_at, lift_coefficients,
                                parse_bad_factors, parse_factor_table, weil_roots_ok)

TABLES = ["61", "79", "197", "431", "1562"]


@pytest.mark.parametrize("op_label, t0, label", GOLDEN)
def test_golden_tables_to_97(op_label, t0, label):
    result = computed(op_label, t0)
    want = table(label)
    assert not result.errors
    assert {p for p, _ in result.skipped} == {p for p in want.skipped if p <= 97}
    got = {f.p: (f.alpha, f.beta) for f in result.factors}
    assert got == {p: (f.alpha, f.beta) for p, f in want.good.items() if p <= 97}


def test_bad_primes_of_quintic(quintic):
    assert [p for p in (2, 3, 5, 7, 11, 71) if bad_reason(quintic, 1, p)] == [2, 11, 71]
    assert bad_reason(quintic, 5, 5) == "t0 is not a p-unit"


def test_bad_prime_refused(quintic):
    with pytest.raises(ValueError):
        euler_factor_at(quintic, 1, 11)


@pytest.mark.parametrize("label", TABLES)
def test_fixture_factors_satisfy_weil(label):
    for p, f in table(label).good.items():
        assert f.within_bounds(), p
        assert f.root_moduli_ok(1e-9), p
        c = f.coefficients()
        assert c[3] == c[1] * p ** 3 and c[4] == p ** 6


@pytest.mark.parametrize("label", ["61", "1562"])
def test_lift_recovers_table_values(label):
    for p, f in table(label).good.items():
        if p < 13:
            continue
        mod = p ** 4
        assert lift_coefficients(f.alpha % mod, f.beta * p % mod, p, 4) == (f.alpha, f.beta)


@settings(max_examples=200, deadline=None)
@given(st.sampled_from([13, 17, 19, 23, 29, 31, 97]), st.floats(-1, 1), st.floats(-1, 1))
def test_lift_property(p, a, b):
    alpha = round(a * 4 * p ** 1.5)
    beta = round(b * 6 * p * p)
    f = EulerFactor(p, alpha, beta)
    assume(f.root_moduli_ok())
    m = auto_precision(p)
    mod = p ** m
    assert lift_coefficients(alpha % mod, beta * p % mod, p, m) == (alpha, beta)


def test_lift_ambiguous_at_low_precision():
    with pytest.raises(LiftAmbiguous):
        lift_coefficients(1, 0, 2, 2)


def test_weil_rejects_off_circle():
    assert not weil_roots_ok([1, 0, 0, 0, 1], 5)
    assert weil_roots_ok(EulerFactor(13, 0, 0).coefficients(), 13)


@pytest.mark.parametrize("op_label, t0, label", GOLDEN)
def test_dwork_sign(op_label, t0, label):
    factors = [f for p, f in table(label).good.items() if p <= 200]
    assert dwork_sign(operator(op_label), t0, factors) == -1


def test_parse_bad_factor_products():
    bad = parse_bad_factors("# comment\n61 -61^4 3805*61 -145\n")
    assert bad[61].coeffs == (1, -145, 3805 * 61, -61 ** 4)
    assert (DATA / "bad_61.txt").exists()


def test_bad_factor_shape():
    with pytest.raises(ValueError):
        BadEulerFactor(2, (2, 1))


def test_parse_table_rejects_garbage():
    with pytest.raises(ValueError):
        parse_factor_table("2 7\n")


def test_store_is_append_only_and_verifies(tmp_path):
    path = tmp_path / "store.txt"
    store = FactorStore(path, {"operator": "x", "t": "1"})
    assert store.record(EulerFactor(7, 9, 8))
    assert store.record_skip(61, "bad")
    again = FactorStore(path)
    assert again.known(7) and again.known(61)
    assert not again.record(EulerFactor(7, 9, 8))
    with pytest.raises(StoreMismatch):
        again.record(EulerFactor(7, 9, 9))
    assert path.read_text().splitlines() == ["# operator x t 1", "7 9 8", "61 skip bad"]


def test_auto_precision_policy():
    assert [auto_precision(p) for p in (2, 3, 5, 7, 11, 13, 997)] == [6, 6, 6, 5, 5, 4, 4]

import re

import pytest

from conftest import DATA, FIXTURES
from eulerfactory.cli import EXIT_INPUT, EXIT_OK, EXIT_STORE, EXIT_VERIFY, main

QUINTIC = str(DATA / "operators" / "1.1.op")


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    return code, capsys.readouterr().out


def test_compute_idempotent_and_tamper_evident(tmp_path, capsys):
    args = ["compute", "--operator", QUINTIC, "--t", "1", "--pmax", "30", "--out", tmp_path,
            "--bad", DATA / "bad_1562.txt"]
    code, out = run(capsys, *args)
    assert code == EXIT_OK
    assert "verified 0 entries, 8 recomputed" in out
    store = tmp_path / "1.1_t1.txt"
    first = store.read_text()
    assert "2 bad 1 1 6 16" in first
    code, out = run(capsys, *args)
    assert code == EXIT_OK
    assert "verified 8 entries, 0 recomputed" in out
    assert store.read_text() == first
    store.write_text(first.replace("\n13 -5 160\n", "\n13 -5 161\n"))
    code, _ = run(capsys, *args)
    assert code == EXIT_STORE


def test_scan(capsys):
    code, out = run(capsys, "scan", "--factors", DATA / "table_79.txt", "--pmax", "97")
    assert code == EXIT_OK
    assert out.splitlines()[0].startswith("l=2 type=(1,1,2)")
    assert out.splitlines()[1].startswith("l=5 type=(2,2)")
    assert len(out.splitlines()) == 2


def test_output_reproducible(capsys):
    args = ["scan", "--factors", DATA / "table_61.txt", "--pmax", "97"]
    assert run(capsys, *args) == run(capsys, *args)


def test_match(capsys):
    code, out = run(capsys, "match", "--factors", DATA / "table_61.txt", "--pmax", "97",
                    "--db", FIXTURES / "paramodular.csv")
    assert code == EXIT_OK
    assert [line.split()[0] for line in out.splitlines()] == ["2.K.61.3.0.a.a"]


def test_match_empty_csv(tmp_path, capsys):
    db = tmp_path / "empty.csv"
    db.write_text("")
    code, out = run(capsys, "match", "--factors", DATA / "table_61.txt", "--db", db)
    assert code == EXIT_VERIFY
    assert "no candidates" in out


def test_checkfeq(capsys):
    base = ["checkfeq", "--factors", DATA / "table_61.txt", "--bad", DATA / "bad_61.txt", "--pmax", "97",
            "--conductor", "61", "--dps", "30"]
    code, out = run(capsys, *base, "--eps", "+")
    assert code == EXIT_OK
    assert float(re.search(r"eta=(\S+)", out).group(1)) <= 1e-12
    code, _ = run(capsys, *base, "--eps", "-")
    assert code == EXIT_VERIFY


def test_checkfeq_missing_bad_factor(capsys):
    code, _ = run(capsys, "checkfeq", "--factors", DATA / "table_61.txt", "--pmax", "97",
                  "--conductor", "61", "--eps", "+")
    assert code == EXIT_INPUT


def test_calibrate(capsys):
    code, out = run(capsys, "calibrate", "--operator", QUINTIC, "--pmax", "17", "--precision", "5")
    assert code == EXIT_OK
    assert out.splitlines()[-1] == "x=-40"


def test_bad_operator_file(tmp_path, capsys):
    bad = tmp_path / "x.op"
    bad.write_text("operator x degree 1\nt^0: 1 0 0\n")
    code, _ = run(capsys, "compute", "--operator", bad, "--t", "1", "--pmax", "10", "--out", tmp_path)
    assert code == EXIT_INPUT


def test_missing_file(tmp_path, capsys):
    code, _ = run(capsys, "scan", "--factors", tmp_path / "nope.txt")
    assert code == EXIT_INPUT


def test_zero_t(tmp_path, capsys):
    code, _ = run(capsys, "compute", "--operator", QUINTIC, "--t", "0", "--pmax", "10", "--out", tmp_path)
    assert code == EXIT_INPUT


def test_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["compute", "--t", "1"])
    assert exc.value.code == 2

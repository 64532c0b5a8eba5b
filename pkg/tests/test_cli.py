import csv
import io
import json

import pytest

from condtest import cli
from condtest.harness import CSV_FIELDS


def _rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_identity_csv(capsys):
    assert cli.main(["identity", "--k", "30", "--eps", "1", "--trials", "2", "--seed", "3"]) == 0
    rows = _rows(capsys.readouterr().out)
    assert len(rows) == 2 and list(rows[0]) == list(CSV_FIELDS)
    assert rows[0]["generator"] == "uniform"


def test_closeness_json(capsys, tmp_path):
    out = tmp_path / "runs.json"
    args = ["closeness", "--k", "16", "--eps", "1", "--trials", "1", "--format", "json", "--out", str(out)]
    assert cli.main(args) == 0
    data = json.loads(out.read_text())
    assert data[0]["tester"] == "closeness" and data[0]["k"] == 16


def test_seed_env_override(capsys, monkeypatch):
    base = ["identity", "--k", "30", "--eps", "1", "--trials", "1", "--gen", "spike"]
    cli.main(base + ["--seed", "5"])
    explicit = _rows(capsys.readouterr().out)
    monkeypatch.setenv("CONDTEST_SEED", "5")
    cli.main(base + ["--seed", "999"])
    from_env = _rows(capsys.readouterr().out)
    assert explicit[0]["seed"] == from_env[0]["seed"]
    assert explicit[0]["queries_q"] == from_env[0]["queries_q"]


def test_sweep(capsys):
    assert cli.main(["sweep", "--k", "16,32", "--eps", "1", "--trials", "1"]) == 0
    rows = _rows(capsys.readouterr().out)
    assert [r["k"] for r in rows] == ["16", "32"]


def test_multipliers_file(capsys, tmp_path):
    path = tmp_path / "mult.toml"
    path.write_text("n2 = 12\nn9 = 1\n")
    code = cli.main(["closeness", "--k", "16", "--trials", "1", "--multipliers", str(path)])
    assert code == 2
    assert "unknown multiplier" in capsys.readouterr().err
    path.write_text("n2 = 12\n")
    assert cli.main(["closeness", "--k", "16", "--eps", "1", "--trials", "1", "--multipliers", str(path)]) == 0


def test_generator_mismatch_aborts(capsys):
    code = cli.main(["identity", "--gen", "two-bump(0.3)", "--eps", "0.5", "--trials", "1"])
    assert code == 2
    assert "l1 distance" in capsys.readouterr().err


def test_unknown_generator(capsys):
    assert cli.main(["identity", "--gen", "gauss", "--trials", "1"]) == 2


def test_verify_lemmas(tmp_path):
    out = tmp_path / "lemmas.json"
    assert cli.main(["verify-lemmas", "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert report["passed"] and report["chilow"]["violations"] == 0


def test_missing_subcommand():
    with pytest.raises(SystemExit):
        cli.main([])

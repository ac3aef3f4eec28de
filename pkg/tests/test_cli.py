import json

import pytest

from stabkam.cli import EXIT_ASSERT, EXIT_BUDGET, EXIT_OK, EXIT_USAGE, dispatch, emit_report


def run(argv, capsys):
    rc = dispatch(argv)
    out = capsys.readouterr()
    return rc, out.out, out.err


def test_code_info_text(capsys):
    rc, out, _ = run(["code", "--builder", "toric", "--lx", "2", "--format", "text"], capsys)
    assert rc == EXIT_OK
    assert out.startswith("N=8 K=2 d=2")


def test_usage_errors(capsys):
    assert run([], capsys)[0] == EXIT_USAGE
    assert run(["nosuch"], capsys)[0] == EXIT_USAGE
    assert run(["flow", "--code", "ising:6", "--set", "bogus=1"], capsys)[0] == EXIT_USAGE
    assert run(["flow", "--code", "ising:6", "--set", "novalue"], capsys)[0] == EXIT_USAGE
    assert run(["code", "save"], capsys)[0] == EXIT_USAGE


def test_code_save_roundtrip(tmp_path, capsys):
    path = tmp_path / "ring.code"
    assert run(["code", "save", "--code", "ising:5", "--out", str(path)], capsys)[0] == EXIT_OK
    rc, out, _ = run(["code", "--file", str(path), "--format", "json"], capsys)
    assert rc == EXIT_OK
    assert json.loads(out)["results"]["N"] == 5


def test_flow_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    argv = ["flow", "--code", "ising:6", "--h", "0.01", "--mu0", "3.0"]
    assert run(argv + ["--out", str(a)], capsys)[0] == EXIT_OK
    assert run(argv + ["--out", str(b)], capsys)[0] == EXIT_OK
    assert a.read_bytes() == b.read_bytes()
    doc = json.loads(a.read_text())
    assert doc["results"]["status"] == "converged"
    assert doc["config"]["mu0"] == 3.0 and len(doc["config_hash"]) == 16


def test_flow_config_file(tmp_path, capsys):
    cfg = tmp_path / "flow.cfg"
    cfg.write_text("# comment\nmu0 = 3.0\nk_max = 5\n")
    out = tmp_path / "o.json"
    rc, _, _ = run(["flow", "--code", "ising:6", "--h", "0.01", "--config", str(cfg), "--out", str(out)], capsys)
    assert rc == EXIT_OK
    assert json.loads(out.read_text())["config"]["k_max"] == 5


def test_flow_csv(capsys):
    rc, out, _ = run(["flow", "--code", "ising:6", "--h", "0.01", "--mu0", "3.0", "--format", "csv"], capsys)
    assert rc == EXIT_OK
    lines = out.splitlines()
    assert lines[0].startswith("# stabkam")
    assert "eps" in lines[1].split(",")
    assert len(lines) >= 3


def test_empty_csv_header_only():
    text = emit_report({}, "csv", None, {"a": 1}, rows=[])
    lines = text.splitlines()
    assert len(lines) == 2 and lines[0].startswith("#")


def test_tqo_strict(capsys):
    assert run(["tqo", "--code", "toric:3x3", "--cap", "3", "--strict"], capsys)[0] == EXIT_OK


def test_spectrum(capsys):
    rc, out, _ = run(["spectrum", "--code", "ising:6", "--h", "0.02"], capsys)
    assert rc == EXIT_OK
    res = json.loads(out)["results"]
    assert res["gap"] > 1.5


def test_spectrum_budget(capsys):
    assert run(["spectrum", "--code", "ising:40"], capsys)[0] == EXIT_BUDGET


def test_selftest(capsys):
    assert run(["selftest", "--quiet"], capsys)[0] == EXIT_OK


def test_assert_code_constant():
    assert EXIT_ASSERT == 2

"""Command-line entry points and artifact determinism."""

import json
import os

import pytest

from flagmult.cli import json_dumps, main


def test_json_dumps_deterministic_and_parseable():
    payload = {"b": [1, 2.5, True, None], "a": {"y": "s", "x": 1e-17}}
    text = json_dumps(payload)
    assert json.loads(text) == {"b": [1, 2.5, True, None],
                                "a": {"x": 1e-17, "y": "s"}}
    assert text.index('"a"') < text.index('"b"')  # keys sorted
    assert json_dumps(payload) == text


def test_verify_passes_and_writes_artifacts(tmp_path, capsys):
    out = tmp_path / "run"
    rc = main(["--grid", "64", "--out-dir", str(out), "verify"])
    captured = capsys.readouterr().out
    assert rc == 0
    assert "verify: PASS" in captured
    data = json.loads((out / "verify.json").read_text())
    assert data["passed"] is True
    assert all(c["passed"] for c in data["checks"])
    assert (out / "verify.csv").exists()


def test_verify_repeat_runs_byte_identical(tmp_path):
    out1 = tmp_path / "a"
    out2 = tmp_path / "b"
    assert main(["--grid", "64", "--seed", "3", "--out-dir", str(out1),
                 "verify"]) == 0
    assert main(["--grid", "64", "--seed", "3", "--out-dir", str(out2),
                 "verify"]) == 0
    assert (out1 / "verify.json").read_bytes() == \
        (out2 / "verify.json").read_bytes()


def test_scan_command(tmp_path, capsys):
    out = tmp_path / "scan"
    rc = main(["--grid", "64", "--out-dir", str(out), "scan"])
    captured = capsys.readouterr().out
    assert rc == 0
    assert "flatness=" in captured
    data = json.loads((out / "scan.json").read_text())
    assert data["family"] == "dilated"
    assert len(data["records"]) == 2


def test_endpoint_probe_command(tmp_path, capsys):
    out = tmp_path / "ep"
    rc = main(["--out-dir", str(out), "endpoint-probe",
               "--resolutions", "64,128"])
    captured = capsys.readouterr().out
    assert rc == 0
    assert "GROWING" in captured
    data = json.loads((out / "endpoint.json").read_text())
    assert data["strictly_increasing"] is True
    assert data["resolutions"] == [64, 128]


def test_leibniz_command(tmp_path, capsys):
    out = tmp_path / "lz"
    rc = main(["--grid", "64", "--out-dir", str(out), "leibniz"])
    captured = capsys.readouterr().out
    assert rc == 0
    assert "leibniz: residual=" in captured
    data = json.loads((out / "leibniz.json").read_text())
    assert data["passed"] is True
    assert len(data["norm_products"]) == 16


def test_report_aggregates(tmp_path, capsys):
    out = tmp_path / "all"
    assert main(["--grid", "64", "--out-dir", str(out), "verify"]) == 0
    assert main(["--grid", "64", "--out-dir", str(out), "leibniz"]) == 0
    capsys.readouterr()
    rc = main(["--out-dir", str(out), "report"])
    captured = capsys.readouterr().out
    assert rc == 0
    assert "summary.csv" in captured
    assert (out / "summary.csv").exists()


def test_report_empty_dir(tmp_path, capsys):
    rc = main(["--out-dir", str(tmp_path), "report"])
    assert rc == 1


def test_config_file_and_bad_config(tmp_path, capsys):
    cfgfile = tmp_path / "exp.cfg"
    cfgfile.write_text("grid.n1 = 64\ngrid.n2 = 64\nfamily.members = 2\n")
    out = tmp_path / "out"
    assert main(["--config", str(cfgfile), "--out-dir", str(out),
                 "scan"]) == 0
    bad = tmp_path / "bad.cfg"
    bad.write_text("grid.n1 = = 64\n")
    rc = main(["--config", str(bad), "verify"])
    captured = capsys.readouterr()
    assert rc == 2
    assert "error:" in captured.err

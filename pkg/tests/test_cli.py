import json
import os
import subprocess
import sys

import pytest

from conekit import cli


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_points_and_determinism(tmp_path, capsys):
    out = str(tmp_path)
    code, text, _ = run(["points", "--domain", "surface", "--eps", "0.1", "--seed", "0", "--out", out], capsys)
    assert code == 0
    info = json.load(open(tmp_path / "points.json"))
    assert info["n_rings"] == 15 and info["seed"] == 0
    assert info["min_separation"] >= 0.1 * (1 - 1e-12)
    first = open(tmp_path / "points.csv", "rb").read()
    assert b"\r" not in first
    assert first.splitlines()[0] == b"j,t,x1,x2,cell_r_lo,cell_r_hi"
    run(["points", "--domain", "surface", "--eps", "0.1", "--seed", "0", "--out", out], capsys)
    assert open(tmp_path / "points.csv", "rb").read() == first


def test_points_too_coarse(tmp_path, capsys):
    code, _, err = run(["points", "--eps", "5.0", "--out", str(tmp_path)], capsys)
    assert code == 2 and "no rings" in err


def test_invalid_weight(tmp_path, capsys):
    code, _, err = run(["cubature", "--domain", "cone", "--mu", "-1", "--n", "4", "--out", str(tmp_path)],
                       capsys)
    assert code == 2 and err.startswith("error:")


def test_cubature_infeasible_hint(tmp_path, capsys):
    code, _, err = run(["cubature", "--n", "8", "--delta", "6", "--out", str(tmp_path)], capsys)
    assert code == 3
    assert "--delta 3" in err


def test_cubature_writes_rule(tmp_path, capsys):
    code, _, _ = run(["cubature", "--n", "6", "--out", str(tmp_path)], capsys)
    assert code == 0
    side = json.load(open(tmp_path / "rule.csv.json"))
    assert side["degree"] == 6 and side["residual"] <= 1e-8 and side["seed"] == 0


def test_check_kernels(tmp_path, capsys):
    code, text, _ = run(["check", "--suite", "kernels", "--seed", "3", "--out", str(tmp_path)], capsys)
    assert code == 0
    rep = json.load(open(tmp_path / "check_kernels.json"))
    assert rep["seed"] == 3
    assert rep["results"]["kernels.oracle_equivalence"]["value"] <= 1e-8
    assert "kernels.oracle_equivalence" in text


def test_check_failure_exit_code(tmp_path, capsys, monkeypatch):
    monkeypatch.setitem(cli.SUITES, "approx", lambda w, seed: {"approx.forced": (False, 1.0)})
    code, _, err = run(["check", "--suite", "approx", "--out", str(tmp_path)], capsys)
    assert code == 4 and "approx.forced" in err


def test_frame_then_parseval(tmp_path, capsys):
    out = str(tmp_path)
    code, _, _ = run(["frame", "--J", "3", "--out", out], capsys)
    assert code == 0
    man = json.load(open(tmp_path / "frame" / "manifest.json"))
    assert man["J"] == 3 and man["band_limit"] == 4
    code, text, _ = run(["approx", "--op", "parseval", "--trials", "5", "--out", out], capsys)
    assert code == 0
    rep = json.load(open(tmp_path / "approx_parseval.json"))
    assert rep["parseval_defect"] <= 1e-6 and rep["seed"] == 0


def test_kernel_decay_csv(tmp_path, capsys):
    code, _, _ = run(["kernel", "--op", "decay", "--n", "8,16", "--kappa", "4", "--assertions", "2",
                      "--out", str(tmp_path)], capsys)
    assert code == 0
    lines = open(tmp_path / "kernel_decay.csv").read().splitlines()
    assert lines[0] == "n,kappa,sup_N1,sup_N2,sup_N3,pairs" and len(lines) == 3


def test_bad_integer_list(tmp_path, capsys):
    code, _, err = run(["kernel", "--op", "oracle", "--n", "4,x", "--out", str(tmp_path)], capsys)
    assert code == 2


def test_formats_help(capsys):
    code, text, _ = run(["--help", "formats"], capsys)
    assert code == 0 and "corpus.csv" in text
    code, text2, _ = run(["formats"], capsys)
    assert text2 == text


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "conekit", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "Exit codes" in r.stdout

from __future__ import annotations

import json
import shutil
import subprocess
import sys
from pathlib import Path

import pytest

from cmpairs.cli import main

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def _write(tmp_path, d, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(d))
    return str(p)


def _verdict(out, prefix):
    return json.loads((out / f"{prefix}_verdict.json").read_text())


def test_selftest_passes(tmp_path, capsys):
    assert main(["selftest", "--out-dir", str(tmp_path)]) == 0
    text = capsys.readouterr().out
    assert "checks passed" in text and "FAIL" not in text
    v = _verdict(tmp_path, "selftest")
    assert v["pass"] and len(v["checks"]) >= 15


def test_hidden_elliptic_selftest(tmp_path, capsys):
    assert main(["selftest-elliptic", "--out-dir", str(tmp_path)]) == 0
    assert all(k.startswith("elliptic.") for k in _verdict(tmp_path, "selftest-elliptic")["checks"])
    help_text = subprocess.run([sys.executable, "-m", "cmpairs.cli", "-h"],
                               capture_output=True, text=True).stdout
    assert "selftest-elliptic" not in help_text


def test_reduced_mode(tmp_path):
    assert main(["reduced", "--config", str(CONFIGS / "reduced.json"), "--out-dir", str(tmp_path)]) == 0
    v = _verdict(tmp_path, "reduced")
    assert v["pass"] and v["checks"]["residual"]["value"] < 1e-8
    header = (tmp_path / "reduced_trajectory.csv").read_text().splitlines()[0]
    assert header.startswith("t,re_x1,im_x1") and "re_alpha3" in header
    meta = json.loads((tmp_path / "reduced_trajectory.json").read_text())["meta"]
    assert meta["config_hash"] == v["config_hash"] and meta["tool_version"]


def test_full_t2_destroys_pairing(tmp_path):
    assert main(["full", "--config", str(CONFIGS / "full_t2_pairs.json"), "--out-dir", str(tmp_path)]) == 0
    p = _verdict(tmp_path, "full_t2_pairs")["pairing"]
    assert p["status"] == "destroyed"
    assert 3.9 <= p["separation_rate_times_eps"] <= 4.1


def test_spectral_mode(tmp_path):
    assert main(["spectral", "--config", str(CONFIGS / "spectral_n2.json"),
                 "--out-dir", str(tmp_path), "--jobs", "1"]) == 0
    v = _verdict(tmp_path, "spectral_n2")
    assert v["pass"] and "zero_locus_max_root_distance" in v
    assert (tmp_path / "spectral_n2_spectral_limit.csv").exists()
    assert (tmp_path / "spectral_n2_zero_locus.json").exists()


def test_compare_n1(tmp_path):
    assert main(["compare", "--config", str(CONFIGS / "compare_n1.json"),
                 "--out-dir", str(tmp_path), "--jobs", "2"]) == 0
    v = _verdict(tmp_path, "compare_n1")
    assert v["pass"] and v["checks"]["convergence.straight_line"]["pass"]


def test_deterministic_output(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["reduced", "--config", str(CONFIGS / "reduced.json"), "--out-dir", str(d)]) == 0
    for name in ("reduced_trajectory.csv", "reduced_trajectory.json", "reduced_verdict.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


@pytest.mark.parametrize("patch", [
    {"lattice": {"omega1": [1, 0], "omega2": [1, 0]}},
    {"tol": 0.5},
    {"flow": 4},
    {"bogus": 1},
    {"initial": {"x": [[0, 0]], "alpha": [[0, 0]], "p": [[0, 0]]}},
    {"initial": {"x": [[0, 0], [0.5, 0]], "alpha": [[0, 0]]}},
    {"initial": {"x": [["a", 0]], "alpha": [[0, 0]]}},
])
def test_invalid_config_exit_2(tmp_path, patch, capsys):
    d = json.loads((CONFIGS / "reduced.json").read_text())
    d.update(patch)
    assert main(["reduced", "--config", _write(tmp_path, d), "--out-dir", str(tmp_path)]) == 2
    assert "invalid configuration" in capsys.readouterr().err


def test_missing_or_broken_config(tmp_path):
    assert main(["reduced", "--config", str(tmp_path / "nope.json")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["reduced", "--config", str(bad)]) == 2
    assert main(["full"]) == 2
    assert main(["selftest", "--jobs", "0"]) == 2


def test_eps_below_cutoff_exit_2(tmp_path):
    d = json.loads((CONFIGS / "full_t2_pairs.json").read_text())
    d["eps"] = 1e-17
    assert main(["full", "--config", _write(tmp_path, d), "--out-dir", str(tmp_path)]) == 2


def test_numerical_failure_exit_3(tmp_path, capsys):
    # the t2 flow drives the pair into a collision near t = eps^2 / 4
    d = json.loads((CONFIGS / "full_t2_pairs.json").read_text())
    d["t_end"] = 1e-5
    assert main(["full", "--config", _write(tmp_path, d), "--out-dir", str(tmp_path)]) == 3
    assert "stage 'integrate'" in capsys.readouterr().err


def test_console_script():
    exe = shutil.which("cmpairs")
    if exe is None:
        pytest.skip("console script not installed")
    r = subprocess.run([exe, "--version"], capture_output=True, text=True)
    assert r.returncode == 0 and "cmpairs" in r.stdout

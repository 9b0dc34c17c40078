import json
import subprocess
import sys

import pytest

from phlab.lab.cli import main

FAST = ["--override", "grid.nx=16", "--override", "grid.ny=65", "--override", "grid.ly=12.0",
        "--override", "run.dt=0.002", "--override", "run.t_end=0.1", "--override", "run.every=5",
        "--override", "run.fit_start=0.0", "--override", "perturbation.wavenumbers=[1, 2, 3]"]


def test_run_then_norms_then_radius(tmp_path, capsys):
    assert main(["run", "--out", str(tmp_path), "--seed", "4", *FAST]) == 0
    assert (tmp_path / "run.csv").exists() and (tmp_path / "final.chk").exists()
    capsys.readouterr()
    assert main(["norms", str(tmp_path / "final.chk"), *FAST]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["normX"] > 0 and report["t"] == pytest.approx(0.1)
    assert main(["radius", str(tmp_path / "run.csv")]) == 0
    assert "PASS" in capsys.readouterr().out


def test_decay_writes_report(tmp_path, capsys):
    assert main(["decay", "--out", str(tmp_path), *FAST]) == 0
    data = json.loads((tmp_path / "decay_report.json").read_text())
    assert data["passed"] and "fitted_rate" in data["values"]
    assert "decay: PASS" in capsys.readouterr().out


def test_config_error_exit_2(tmp_path, capsys):
    cfg = tmp_path / "bad.yaml"
    cfg.write_text("model:\n  alpha: 0.8\n  r: 1\n")
    assert main(["decay", "--config", str(cfg)]) == 2
    err = capsys.readouterr().err
    assert "model.alpha" in err and "model.r" in err


def test_missing_config_exit_2(tmp_path):
    assert main(["run", "--config", str(tmp_path / "missing.yaml")]) == 2


def test_seed_out_of_range_exit_2():
    assert main(["run", "--seed", str(2**64)]) == 2


def test_runtime_error_exit_3(tmp_path, capsys):
    assert main(["norms", str(tmp_path / "missing.chk")]) == 3
    (tmp_path / "bad.chk").write_bytes(b"junk" * 40)
    assert main(["norms", str(tmp_path / "bad.chk")]) == 3
    assert "magic" in capsys.readouterr().err


def test_assertion_failure_exit_1(tmp_path):
    # a negative tolerance demands six times the target rate, which no run reaches
    args = [*FAST, "--override", "model.damping_on=false", "--override", "run.rate_tol=-5.0"]
    assert main(["decay", "--out", str(tmp_path), *args]) == 1


def test_radius_fails_on_tampered_csv(tmp_path, capsys):
    assert main(["run", "--out", str(tmp_path), *FAST]) == 0
    lines = (tmp_path / "run.csv").read_text().splitlines()
    cols = lines[2].split(",")
    cols[lines[0].split(",").index("tau")] = "0.1"
    lines[2] = ",".join(cols)
    (tmp_path / "run.csv").write_text("\n".join(lines) + "\n")
    assert main(["radius", str(tmp_path / "run.csv")]) == 1


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "phlab", "--help"], capture_output=True, text=True)
    assert out.returncode == 0 and "uniqueness" in out.stdout

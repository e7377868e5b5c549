import json
import subprocess
import sys

import numpy as np
import pytest

from quadprop import WaveFunction, apply_forward, gaussian, get_model
from quadprop.cli import EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, RunConfig, main

import oracles


def write_config(tmp_path, **cfg):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg))
    return str(path)


def run_cli(tmp_path, *extra, **cfg):
    out = tmp_path / "out"
    return main(["--config", write_config(tmp_path, **cfg), "--out", str(out), "--quiet",
                 *extra]), out


def test_evolve_writes_outputs(tmp_path):
    rc, out = run_cli(tmp_path, model="free_particle", times=[0.5, 1.0])
    assert rc == EXIT_OK
    psi = WaveFunction.from_csv(str(out / "psi_000.csv"))
    assert np.max(np.abs(psi.values - oracles.free_gaussian(psi.x, 0.5))) < 1e-6
    meta = json.loads((out / "metadata.json").read_text())
    assert meta["config"]["times"] == [0.5, 1.0]
    assert [r["file"] for r in meta["results"]] == ["psi_000.csv", "psi_001.csv"]
    assert meta["results"][0]["mu"] == pytest.approx(0.5)
    assert meta["results"][0]["norms"]["l2"] == pytest.approx(psi.norm_l2(), rel=1e-12)


def test_csv_output_round_trips(tmp_path):
    rc, out = run_cli(tmp_path, model="forced_oscillator", times=[0.7])
    assert rc == EXIT_OK
    text = (out / "psi_000.csv").read_text()
    assert text.splitlines()[0] == "x,re,im,abs"
    psi = WaveFunction.from_csv(text)
    expected = apply_forward(gaussian(), get_model("forced_oscillator"), 0.7)
    np.testing.assert_array_equal(psi.values, expected.values)


def test_invert_with_expression_initial(tmp_path):
    rc, out = run_cli(tmp_path, model="uniform_field", task="invert", times=[0.4],
                      initial={"type": "expression", "re": "exp(-x**2/2)", "im": "0"})
    assert rc == EXIT_OK


def test_file_initial_and_custom_model(tmp_path):
    src = tmp_path / "chi.json"
    gaussian(width=0.8).to_json(str(src))
    rc, out = run_cli(tmp_path, model={"name": "slow", "a": "1/4"}, times=[1.0],
                      initial={"type": "file", "path": str(src)})
    assert rc == EXIT_OK
    assert json.loads((out / "metadata.json").read_text())["model"]["name"] == "slow"


def test_nonlinear_writes_iteration_log(tmp_path):
    rc, out = run_cli(tmp_path, model="free_particle", task="nonlinear", times=[0.3],
                      grid={"x_min": -7, "x_max": 7, "n": 13311},
                      nonlinear={"lambda": 0.1, "n_t": 17})
    assert rc == EXIT_OK
    log = json.loads((out / "iterations_000.json").read_text())
    assert log["converged"] and log["iterations"] == len(log["log"])


def test_nonlinear_not_converged_exits_one(tmp_path):
    rc, out = run_cli(tmp_path, model="free_particle", task="nonlinear", times=[0.3],
                      grid={"x_min": -7, "x_max": 7, "n": 13311},
                      nonlinear={"lambda": 0.1, "n_t": 17, "max_iter": 1})
    assert rc == EXIT_CHECK_FAILED
    assert (out / "psi_000.csv").exists()


def test_verify_task(tmp_path):
    rc, out = run_cli(tmp_path, "--task", "verify", model="forced_oscillator")
    assert rc == EXIT_OK
    report = json.loads((out / "report.json").read_text())
    assert report and all(r["passed"] for r in report)


@pytest.mark.parametrize("cfg", [
    {"times": []},
    {"model": "no_such_model"},
    {"model": "forced_oscillator", "times": [3.2]},
    {"times": [-0.1]},
    {"grid": {"n": 2000}},
    {"grid": {"x_min": 1, "x_max": -1}},
    {"task": "dance"},
    {"route": "shortcut"},
    {"colour": "blue"},
    {"times": ["soon"]},
    {"model": {"a": "1/2", "z": "1"}},
    {"model": {"a": "__import__('os')"}},
    {"initial": {"type": "file", "path": "/nonexistent.csv"}},
    {"task": "nonlinear", "nonlinear": {"nu": 2}},
])
def test_config_errors_exit_two(tmp_path, cfg):
    assert run_cli(tmp_path, **cfg)[0] == EXIT_CONFIG


def test_unreadable_config_exits_two(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["--config", str(bad)]) == EXIT_CONFIG
    assert main(["--config", str(tmp_path / "missing.json")]) == EXIT_CONFIG


def test_under_resolved_grid_exits_three(tmp_path, capsys):
    rc, out = run_cli(tmp_path, times=[0.01])
    assert rc == EXIT_NUMERIC
    assert "UnderResolvedPhaseError" in capsys.readouterr().err
    assert json.loads((out / "metadata.json").read_text())["error"]["type"] == \
        "UnderResolvedPhaseError"


def test_config_round_trip():
    cfg = RunConfig.from_dict({"model": "uniform_field", "params": {"f": "2"}, "times": [1]})
    again = RunConfig.from_dict(cfg.to_dict())
    assert again.to_dict() == cfg.to_dict()
    assert cfg.grid["n"] == 2001 and cfg.nonlinear["lambda"] == 0.0


def test_module_entry_point(tmp_path):
    path = write_config(tmp_path, times=[0.5])
    proc = subprocess.run([sys.executable, "-m", "quadprop", "--config", path, "--out",
                           str(tmp_path / "o")], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "psi_000.csv" in proc.stdout

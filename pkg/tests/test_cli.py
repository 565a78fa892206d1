"""Command-line surface."""

import json

import pytest
from typer.testing import CliRunner

from cli.main import app

runner = CliRunner()


def _write_scenario(tmp_path, **extra):
    data = {
        "name": "tiny",
        "profile": "test",
        "seed": 5,
        "trajectory": {"synthetic": {"n_points": 3, "seed": 2}},
        "attack": {"kind": "none", "window": {"attack_start": 1, "attack_end": 3}},
    }
    data.update(extra)
    path = tmp_path / "tiny.json"
    path.write_text(json.dumps(data), encoding="utf-8")
    return path


def test_version():
    result = runner.invoke(app, ["version"])
    assert result.exit_code == 0
    assert "prsguard" in result.stdout


def test_config_init_then_show(tmp_path):
    result = runner.invoke(app, ["config", "--init"])
    assert result.exit_code == 0
    assert (tmp_path / "config" / "config.yaml").exists()

    result = runner.invoke(app, ["config", "--show"])
    assert result.exit_code == 0
    assert "workers" in result.stdout


def test_config_without_flags_prints_hint():
    result = runner.invoke(app, ["config"])
    assert result.exit_code == 0
    assert "--show" in result.stdout


def test_run_with_missing_config_fails(tmp_path):
    result = runner.invoke(app, ["run", "--config", str(tmp_path / "absent.json")])
    assert result.exit_code == 1
    assert "Error" in result.stdout


def test_run_with_invalid_config_fails(tmp_path):
    path = _write_scenario(tmp_path, prs={"k_comb": 5})
    result = runner.invoke(app, ["run", "--config", str(path)])
    assert result.exit_code == 1
    assert "Error" in result.stdout


def test_unknown_profile_override_fails(tmp_path):
    path = _write_scenario(tmp_path)
    result = runner.invoke(app, ["run", "--config", str(path), "--profile", "huge"])
    assert result.exit_code == 1


def test_run_writes_results(tmp_path):
    path = _write_scenario(tmp_path, security={"handshake": True})
    out = tmp_path / "out"
    result = runner.invoke(app, ["run", "--config", str(path), "--out", str(out)])
    assert result.exit_code == 0, result.stdout
    for name in ("epochs.csv", "metrics.json", "config_resolved.json"):
        assert (out / name).exists()
    resolved = json.loads((out / "config_resolved.json").read_text(encoding="utf-8"))
    assert resolved["seed"] == 5
    assert resolved["attack"]["power_dbm"] == 48.0


def test_seed_override_lands_in_resolved_config(tmp_path):
    path = _write_scenario(tmp_path)
    out = tmp_path / "out"
    result = runner.invoke(app, ["run", "-c", str(path), "-o", str(out), "--seed", "99"])
    assert result.exit_code == 0, result.stdout
    resolved = json.loads((out / "config_resolved.json").read_text(encoding="utf-8"))
    assert resolved["seed"] == 99


def test_default_output_dir_comes_from_settings(tmp_path):
    path = _write_scenario(tmp_path)
    result = runner.invoke(app, ["run", "-c", str(path)])
    assert result.exit_code == 0, result.stdout
    assert (tmp_path / "runs" / "tiny" / "epochs.csv").exists()


@pytest.mark.slow
def test_sweep_writes_one_directory_per_value(tmp_path):
    path = _write_scenario(tmp_path)
    out = tmp_path / "sweep"
    result = runner.invoke(
        app, ["sweep", "1", "2", "-c", str(path), "-p", "seed", "-o", str(out)]
    )
    assert result.exit_code == 0, result.stdout
    assert (out / "seed=1" / "metrics.json").exists()
    assert (out / "seed=2" / "metrics.json").exists()


def test_sweep_rejects_bad_parameter(tmp_path):
    path = _write_scenario(tmp_path)
    result = runner.invoke(app, ["sweep", "9", "-c", str(path), "-p", "prs.k_comb"])
    assert result.exit_code == 1
    assert "Error" in result.stdout


@pytest.mark.slow
def test_calibrate_threshold(tmp_path):
    path = _write_scenario(tmp_path)
    result = runner.invoke(app, ["calibrate-threshold", "-c", str(path), "-n", "100"])
    assert result.exit_code == 0, result.stdout
    assert "dB" in result.stdout

"""Scenario loading, overrides and application settings."""

import json
from pathlib import Path

import pytest
import yaml

from config.scenario_loader import (
    apply_overrides,
    load_scenario_config,
    read_scenario_data,
    set_dotted,
    validate_scenario,
)
from config.settings import ConfigManager, Settings, get_config_manager, get_settings
from core.errors import ConfigurationError
from models.scenario import AttackKind, Phase, PhaseWindow, ScenarioConfig

SCENARIO_DIR = Path(__file__).resolve().parent.parent / "scenarios"


def test_defaults_are_resolved():
    cfg = ScenarioConfig()
    assert cfg.attack.power_dbm == 48.0
    assert cfg.thresholds.gamma == pytest.approx(3.7942, abs=1e-4)
    assert cfg.thresholds.reinit_after == 2
    assert cfg.thresholds.reinit_window == 3
    disabled = validate_scenario({"thresholds": {"reinit_after": None}})
    assert disabled.thresholds.reinit_after is None
    assert cfg.prs.k_comb == 6
    assert cfg.receiver.kappa_db == 11.5


def test_phase_window():
    window = PhaseWindow()
    assert window.phase_of(300) == Phase.BENIGN
    assert window.phase_of(301) == Phase.ATTACK
    assert window.phase_of(900) == Phase.ATTACK
    assert window.phase_of(901) == Phase.RECOVERY


def test_load_json_and_yaml(tmp_path):
    data = {"name": "demo", "attack": {"kind": "jamming"}, "security": {"hmac": True}}
    json_path = tmp_path / "demo.json"
    json_path.write_text(json.dumps(data))
    yaml_path = tmp_path / "demo.yaml"
    yaml_path.write_text(yaml.safe_dump(data))
    a = load_scenario_config(json_path)
    b = load_scenario_config(yaml_path)
    assert a == b
    assert a.attack.kind == AttackKind.JAMMING
    assert a.security.tags


@pytest.mark.parametrize(
    "data",
    [
        {"atack": {}},
        {"prs": {"k_comb": 5}},
        {"profile": "huge"},
        {"seed": -1},
        {"thresholds": {"mofn_m": 3, "mofn_n": 2}},
        {"thresholds": {"reinit_after": 0}},
        {"thresholds": {"reinit_window": 2}},
        {"attack": {"window": {"attack_start": 10, "attack_end": 5}}},
        {"keys": {"prs_key_hex": "abcd"}},
        {"trajectory": {"synthetic": {"speed_min_mps": 20.0, "speed_max_mps": 10.0}}},
        {"trajectory": {"synthetic": {"n_points": 100}}},
    ],
)
def test_invalid_scenarios(data):
    with pytest.raises(ConfigurationError):
        validate_scenario(data)


def test_unreadable_files(tmp_path):
    with pytest.raises(ConfigurationError):
        read_scenario_data(tmp_path / "missing.json")
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    with pytest.raises(ConfigurationError):
        read_scenario_data(broken)
    listing = tmp_path / "list.yaml"
    listing.write_text("- 1\n- 2\n")
    with pytest.raises(ConfigurationError):
        read_scenario_data(listing)


def test_set_dotted():
    data = {"attack": {"kind": "none"}}
    set_dotted(data, "attack.power_dbm", 30)
    set_dotted(data, "receiver.kappa_db", 12)
    assert data == {"attack": {"kind": "none", "power_dbm": 30}, "receiver": {"kappa_db": 12}}
    with pytest.raises(ConfigurationError):
        set_dotted(data, "attack.kind.value", 1)


def test_overrides_rederive_defaults():
    cfg = ScenarioConfig()
    louder = apply_overrides(cfg, {"channel.attacker_power_dbm": "52"})
    assert louder.attack.power_dbm == 52.0
    looser = apply_overrides(cfg, {"thresholds.gate_confidence": 0.95})
    assert looser.thresholds.gamma == pytest.approx(5.9915, abs=1e-4)
    explicit = apply_overrides(cfg, {"attack.power_dbm": 30, "security.absa": "true"})
    assert explicit.attack.power_dbm == 30.0
    assert explicit.security.absa is True
    with pytest.raises(ConfigurationError):
        apply_overrides(cfg, {"prs.k_comb": 7})


def test_settings_from_environment(monkeypatch):
    monkeypatch.setenv("PRSGUARD_WORKERS", "auto")
    monkeypatch.setenv("PRSGUARD_LOG_LEVEL", "debug")
    settings = Settings()
    assert settings.workers == "auto"
    assert settings.resolved_workers() >= 1
    assert settings.log_level == "DEBUG"


def test_settings_validation():
    with pytest.raises(ValueError):
        Settings(workers=0)
    with pytest.raises(ValueError):
        Settings(log_level="LOUD")
    assert Settings(workers="3").resolved_workers() == 3


def test_config_file_round_trip(tmp_path):
    manager = get_config_manager()
    path = manager.create_default_config()
    assert path.exists()
    assert yaml.safe_load(path.read_text())["default_profile"] == "test"

    manager.settings = Settings(workers=4, default_profile="full")
    manager.save_config()
    reloaded = ConfigManager(Settings())
    assert reloaded.settings.workers == 4
    assert reloaded.settings.default_profile == "full"
    assert reloaded.load_warning is None


def test_broken_config_file_warns():
    settings = get_settings()
    settings.config_dir.mkdir(parents=True, exist_ok=True)
    (settings.config_dir / "config.yaml").write_text("workers: [unclosed\n")
    manager = ConfigManager(Settings())
    assert manager.load_warning is not None
    assert manager.settings.workers == 1


@pytest.mark.parametrize(
    "name",
    ["benign.yaml", "jamming.yaml", "fbs_spoof.yaml", "fbs_spoof_encrypted.yaml", "meaconing.json"],
)
def test_shipped_scenarios_load(name):
    cfg = load_scenario_config(SCENARIO_DIR / name)
    assert cfg.trajectory.synthetic.n_points == 120
    assert cfg.attack.window.phase_of(60).value == "attack"

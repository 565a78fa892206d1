"""Scenario file loading (JSON or YAML) and dotted-path overrides."""

import json
from pathlib import Path
from typing import Any, Dict, Union

import yaml
from pydantic import ValidationError

from core.errors import ConfigurationError
from core.tracking import gate_threshold
from models.scenario import ScenarioConfig

YAML_SUFFIXES = (".yaml", ".yml")


def _format_errors(exc: ValidationError) -> str:
    return "; ".join(
        f"{'.'.join(str(p) for p in err['loc']) or '<root>'}: {err['msg']}" for err in exc.errors()
    )


def read_scenario_data(path: Union[str, Path]) -> Dict[str, Any]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError(f"cannot read scenario file {path}: {exc.strerror}") from exc
    try:
        data = yaml.safe_load(text) if path.suffix.lower() in YAML_SUFFIXES else json.loads(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        kind = "YAML" if path.suffix.lower() in YAML_SUFFIXES else "JSON"
        raise ConfigurationError(f"{path} is not valid {kind}: {exc}") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigurationError(f"{path} must contain a mapping at the top level")
    return data


def validate_scenario(data: Dict[str, Any]) -> ScenarioConfig:
    try:
        return ScenarioConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigurationError(f"invalid scenario: {_format_errors(exc)}") from exc


def load_scenario_config(path: Union[str, Path]) -> ScenarioConfig:
    """Read and validate a scenario file; unknown keys are rejected."""
    return validate_scenario(read_scenario_data(path))


def set_dotted(data: Dict[str, Any], dotted: str, value: Any) -> None:
    """Set ``data['a']['b'] = value`` for ``dotted == 'a.b'``, creating mappings."""
    keys = dotted.split(".")
    node = data
    for key in keys[:-1]:
        child = node.setdefault(key, {})
        if not isinstance(child, dict):
            raise ConfigurationError(f"{dotted}: {key} is not a section")
        node = child
    node[keys[-1]] = value


def apply_overrides(cfg: ScenarioConfig, overrides: Dict[str, Any]) -> ScenarioConfig:
    """Return a re-validated copy with dotted-path overrides applied.

    Values that are strings are parsed as YAML scalars, so ``"48"`` becomes
    a number and ``"true"`` a boolean.
    """
    data = cfg.model_dump(mode="json")
    # drop values derived from other fields so overrides can re-derive them
    if cfg.attack.power_dbm == cfg.channel.attacker_power_dbm:
        data["attack"]["power_dbm"] = None
    if cfg.thresholds.gamma == gate_threshold(cfg.thresholds.gate_confidence):
        data["thresholds"]["gamma"] = None
    for dotted, value in overrides.items():
        if isinstance(value, str):
            value = yaml.safe_load(value)
        set_dotted(data, dotted, value)
    return validate_scenario(data)

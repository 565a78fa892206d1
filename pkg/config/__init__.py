"""Configuration management for prsguard."""

from .scenario_loader import apply_overrides, load_scenario_config
from .settings import get_config_manager, get_settings

__all__ = ["apply_overrides", "get_config_manager", "get_settings", "load_scenario_config"]

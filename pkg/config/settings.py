"""Application settings for prsguard."""

from pathlib import Path
from typing import Any, Dict, Optional, Union

import psutil
import yaml
from platformdirs import user_config_dir, user_data_dir
from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

APP_NAME = "prsguard"
USER_SETTINGS_KEYS = ("log_level", "debug", "workers", "default_profile", "output_dir")


class Settings(BaseSettings):
    """Application settings with environment variable support (PRSGUARD_*)."""

    model_config = SettingsConfigDict(
        env_prefix="PRSGUARD_", env_file=".env", env_file_encoding="utf-8", extra="ignore"
    )

    log_level: str = Field("INFO", description="Root log level for the CLI")
    debug: bool = False
    workers: Union[int, str] = Field(1, description="Worker processes, or 'auto'")
    default_profile: str = Field("test", description="Numerology profile when a config omits it")

    config_dir: Path = Field(default_factory=lambda: Path(user_config_dir(APP_NAME)))
    output_dir: Path = Field(default_factory=lambda: Path(user_data_dir(APP_NAME)) / "runs")

    @field_validator("workers")
    @classmethod
    def _workers(cls, value: Union[int, str]) -> Union[int, str]:
        if isinstance(value, str) and value != "auto":
            value = int(value)
        if isinstance(value, int) and value < 1:
            raise ValueError("workers must be at least 1")
        return value

    @field_validator("log_level")
    @classmethod
    def _level(cls, value: str) -> str:
        value = value.upper()
        if value not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            raise ValueError(f"unknown log level {value}")
        return value

    def resolved_workers(self) -> int:
        if self.workers == "auto":
            return max(1, psutil.cpu_count(logical=False) or 1)
        return int(self.workers)


class ConfigManager:
    """Loads and saves the YAML user settings file."""

    def __init__(self, settings: Optional[Settings] = None):
        self.settings = settings or Settings()
        self.config_file = self.settings.config_dir / "config.yaml"
        self.load_warning: Optional[str] = None
        self._load_user_config()

    def _load_user_config(self) -> None:
        if not self.config_file.exists():
            return
        try:
            data = yaml.safe_load(self.config_file.read_text(encoding="utf-8")) or {}
        except (OSError, yaml.YAMLError) as e:
            self.load_warning = f"Failed to load config file: {e}"
            return
        merged = self.settings.model_dump()
        merged.update({k: v for k, v in data.items() if k in USER_SETTINGS_KEYS})
        self.settings = Settings(**merged)

    def as_dict(self) -> Dict[str, Any]:
        data = self.settings.model_dump(include=set(USER_SETTINGS_KEYS))
        data["output_dir"] = str(data["output_dir"])
        return data

    def save_config(self) -> Path:
        self.settings.config_dir.mkdir(parents=True, exist_ok=True)
        with open(self.config_file, "w", encoding="utf-8") as f:
            yaml.safe_dump(self.as_dict(), f, default_flow_style=False, sort_keys=False)
        return self.config_file

    def create_default_config(self) -> Path:
        """Write a commented default settings file."""
        self.settings.config_dir.mkdir(parents=True, exist_ok=True)
        yaml_content = f"""# prsguard settings
# Environment variables PRSGUARD_<NAME> override these values.

log_level: "INFO"
debug: false

# worker processes for epoch synthesis, or "auto" for one per physical core
workers: 1

default_profile: "test"
output_dir: "{self.settings.output_dir}"
"""
        self.config_file.write_text(yaml_content, encoding="utf-8")
        return self.config_file


_config_manager: Optional[ConfigManager] = None


def get_config_manager() -> ConfigManager:
    """Get global config manager instance."""
    global _config_manager
    if _config_manager is None:
        _config_manager = ConfigManager()
    return _config_manager


def get_settings() -> Settings:
    """Get global settings instance."""
    return get_config_manager().settings


def reset_config_manager() -> None:
    global _config_manager
    _config_manager = None

"""Shared fixtures for the prsguard test suite."""

import os
import sys

import numpy as np
import pytest

# make the checkout importable without installing
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from config.settings import reset_config_manager
from models.scenario import ScenarioConfig
from models.signal import Numerology, PrsConfig


@pytest.fixture
def num() -> Numerology:
    """30.72 MHz test numerology."""
    return Numerology.from_profile("test")


@pytest.fixture
def prs_cfg() -> PrsConfig:
    return PrsConfig(n_id_seq=17, k_comb=6, k_offset=0, num_symbols=12)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def small_scenario() -> ScenarioConfig:
    """Short synthetic run with the attack on epochs 11-30 of 40."""
    return ScenarioConfig.model_validate(
        {
            "name": "small",
            "profile": "test",
            "seed": 7,
            "trajectory": {"synthetic": {"n_points": 40, "seed": 3}},
            "attack": {"window": {"attack_start": 11, "attack_end": 30}},
        }
    )


@pytest.fixture(autouse=True)
def isolated_settings(tmp_path, monkeypatch):
    """Keep settings and output away from the user's real directories."""
    monkeypatch.setenv("PRSGUARD_CONFIG_DIR", str(tmp_path / "config"))
    monkeypatch.setenv("PRSGUARD_OUTPUT_DIR", str(tmp_path / "runs"))
    monkeypatch.delenv("PRSGUARD_WORKERS", raising=False)
    monkeypatch.delenv("PRSGUARD_LOG_LEVEL", raising=False)
    reset_config_manager()
    yield
    reset_config_manager()

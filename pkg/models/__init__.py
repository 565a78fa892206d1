"""Data models for prsguard."""

from .records import EpochRecord, MetricsReport
from .scenario import AttackKind, Phase, PhaseWindow, ScenarioConfig
from .signal import IqSignal, Numerology, PrsConfig, ResourceGrid
from .verdict import DetectionVerdict, OutcomeClass, OutcomeKind, Technique

__all__ = [
    "AttackKind",
    "DetectionVerdict",
    "EpochRecord",
    "IqSignal",
    "MetricsReport",
    "Numerology",
    "OutcomeClass",
    "OutcomeKind",
    "Phase",
    "PhaseWindow",
    "PrsConfig",
    "ResourceGrid",
    "ScenarioConfig",
    "Technique",
]

"""Per-epoch results and aggregated metrics."""

from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, Field

from models.scenario import Phase
from models.verdict import DetectionVerdict, OutcomeClass, OutcomeKind, Technique


class EpochRecord(BaseModel):
    """Everything observed and decided for one trajectory point."""

    epoch: int = Field(..., ge=1, description="1-based trajectory index")
    phase: Phase
    t_s: float
    truth: Tuple[float, float]
    estimate: Optional[Tuple[float, float]] = Field(None, description="None for DoS")
    outcome: OutcomeClass
    serving_bs: Tuple[int, int, int]
    reference_bs: Optional[int] = None
    n_detected: int = 0
    attacker_distance_m: Optional[float] = None
    verdicts: Dict[Technique, DetectionVerdict] = Field(default_factory=dict)
    diagnostics: Dict[str, float] = Field(default_factory=dict)

    @property
    def attacked(self) -> bool:
        return self.attacker_distance_m is not None


class MetricsReport(BaseModel):
    """Outcome shares and detection performance of one run."""

    scenario: str
    n_epochs: int
    phase_counts: Dict[Phase, int]
    phase_shares: Dict[Phase, Dict[OutcomeKind, float]]
    attacked_shares: Optional[Dict[OutcomeKind, float]] = Field(
        None, description="Outcome shares over epochs with an active attack"
    )
    decision_rates: Dict[Technique, Dict[str, Optional[float]]] = Field(
        default_factory=dict,
        description="Correct-decision rate per technique under benign and attack conditions",
    )
    false_alarm_rates: Dict[Technique, Optional[float]] = Field(default_factory=dict)
    accepted_wrong_rates: Dict[Technique, Optional[float]] = Field(default_factory=dict)
    accepted_wrong_rate_undefended: Optional[float] = None
    benign_error_percentiles_m: Dict[str, float] = Field(default_factory=dict)
    attacked_median_error_m: Optional[float] = None
    median_attacker_distance_m: Optional[float] = None
    phase_homogeneity_p: float = 1.0
    techniques: List[Technique] = Field(default_factory=list)

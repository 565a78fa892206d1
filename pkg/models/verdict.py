"""Detection verdicts and positioning outcomes."""

from enum import Enum
from typing import Dict, Optional

from pydantic import BaseModel, Field, model_validator


class Technique(str, Enum):
    """Threat-detection techniques evaluated per epoch."""
    HMAC = "hmac"
    DS = "ds"
    ABSA = "absa"
    HANDSHAKE = "handshake"
    TRACKING = "tracking"


class OutcomeKind(str, Enum):
    """Positioning outcome classes."""
    SUCCESS = "Success"
    LARGE_ERROR = "LargeError"
    DOS = "DoS"


class DetectionVerdict(BaseModel):
    """Valid/invalid decision of one technique for one epoch."""

    technique: Technique = Field(..., description="Technique that produced the verdict")
    valid: bool = Field(..., description="True if the measurement is accepted")
    reason: Optional[str] = Field(None, description="Why the verdict is invalid")
    diagnostics: Dict[str, float] = Field(default_factory=dict)


class OutcomeClass(BaseModel):
    kind: OutcomeKind
    error_m: Optional[float] = Field(None, ge=0.0, description="Absent for DoS")

    @model_validator(mode="after")
    def _check_error(self) -> "OutcomeClass":
        if (self.kind == OutcomeKind.DOS) != (self.error_m is None):
            raise ValueError("error_m must be absent exactly for DoS outcomes")
        return self

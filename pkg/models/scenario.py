"""Scenario configuration models.

Every model rejects unknown keys so that typos in a scenario file surface
as validation errors instead of silently falling back to defaults.
"""

from enum import Enum
from pathlib import Path
from typing import List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from scipy.stats import chi2


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class AttackKind(str, Enum):
    """Adversary behaviours."""
    NONE = "none"
    FBS_SPOOF = "fbs_spoof"
    MEACONING = "meaconing"
    JAMMING = "jamming"


class Phase(str, Enum):
    BENIGN = "benign"
    ATTACK = "attack"
    RECOVERY = "recovery"


class PhaseWindow(StrictModel):
    """1-based inclusive epoch range during which the attack is active."""

    attack_start: int = Field(301, ge=1)
    attack_end: int = Field(900, ge=1)

    @model_validator(mode="after")
    def _ordered(self) -> "PhaseWindow":
        if self.attack_end < self.attack_start:
            raise ValueError("attack_end precedes attack_start")
        return self

    def phase_of(self, epoch: int) -> Phase:
        if epoch < self.attack_start:
            return Phase.BENIGN
        if epoch <= self.attack_end:
            return Phase.ATTACK
        return Phase.RECOVERY


class AttackConfig(StrictModel):
    kind: AttackKind = Field(AttackKind.NONE, description="Adversary behaviour")
    power_dbm: Optional[float] = Field(
        None, description="Transmit power; defaults to channel.attacker_power_dbm"
    )
    lag_points: int = Field(10, ge=0, description="Trajectory points the attacker trails")
    spoof_offset_m: Tuple[float, float] = Field(
        (200.0, 0.0), description="Fake position relative to the attacker"
    )
    spoof_target_position: Optional[Tuple[float, float]] = Field(
        None, description="Absolute fake position; overrides spoof_offset_m"
    )
    spoof_bs_subset: Optional[List[int]] = Field(
        None, description="Serving-set indices to spoof; None spoofs all"
    )
    meacon_processing_delay_s: float = Field(1e-6, ge=0.0)
    jam_bandwidth_hz: Optional[float] = Field(
        None, gt=0.0, description="Jammer bandwidth; None uses the occupied PRS band"
    )
    window: PhaseWindow = Field(default_factory=PhaseWindow)

    @field_validator("spoof_bs_subset")
    @classmethod
    def _subset(cls, value: Optional[List[int]]) -> Optional[List[int]]:
        if value is not None and any(i < 0 or i > 2 for i in value):
            raise ValueError("serving-set indices are 0, 1 or 2")
        return value


class ChannelConfig(StrictModel):
    fc_hz: float = Field(3.5e9, gt=0.0)
    bs_height_m: float = 25.0
    ue_height_m: float = 1.5
    attacker_height_m: float = 1.5
    noise_figure_db: float = 7.0
    tx_cap_dbm: float = 24.0
    attacker_power_dbm: float = 48.0
    target_rx_dbm: float = Field(-80.0, description="Power-control receive target")
    min_distance_m: float = Field(10.0, gt=0.0, description="Path-loss distance floor")
    # recorded for provenance; the LOS path-loss formula does not use them
    building_height_m: float = 15.0
    street_width_m: float = 5.0


class SecurityToggles(StrictModel):
    encryption: bool = False
    hmac: bool = False
    ds: bool = False
    absa: bool = False
    handshake: bool = False
    tracking: bool = False

    @property
    def tags(self) -> bool:
        return self.hmac or self.ds


def _hex_field(value: str, n_bytes: Optional[int], name: str) -> str:
    try:
        raw = bytes.fromhex(value)
    except ValueError as exc:
        raise ValueError(f"{name} is not valid hex") from exc
    if n_bytes is not None and len(raw) != n_bytes:
        raise ValueError(f"{name} must be {n_bytes} bytes")
    if n_bytes is None and len(raw) < 16:
        raise ValueError(f"{name} must be at least 16 bytes")
    return value.lower()


class KeySettings(StrictModel):
    """Pre-shared secrets as hex strings."""

    prs_key_hex: str = "2b7e151628aed2a6abf7158809cf4f3c"
    hmac_key_hex: str = "000102030405060708090a0b0c0d0e0f101112131415161718191a1b1c1d1e1f"
    ds_seed_hex: str = "9d61b19deffd5a60ba844af492ec2cc44449c5697b326919703bac031cae7f60"

    @field_validator("prs_key_hex")
    @classmethod
    def _prs_key(cls, value: str) -> str:
        return _hex_field(value, 16, "prs_key_hex")

    @field_validator("hmac_key_hex")
    @classmethod
    def _hmac_key(cls, value: str) -> str:
        return _hex_field(value, None, "hmac_key_hex")

    @field_validator("ds_seed_hex")
    @classmethod
    def _ds_seed(cls, value: str) -> str:
        return _hex_field(value, 32, "ds_seed_hex")


class PrsSettings(StrictModel):
    k_comb: int = 6
    num_symbols: int = Field(12, ge=1)
    start_symbol: int = Field(0, ge=0)
    stagger: bool = True
    n_slots: int = Field(2, ge=1, le=10, description="Slots integrated per epoch")

    @field_validator("k_comb")
    @classmethod
    def _comb(cls, value: int) -> int:
        if value not in (2, 4, 6, 12):
            raise ValueError("k_comb must be one of 2, 4, 6, 12")
        return value


class ReceiverSettings(StrictModel):
    kappa_db: float = Field(11.5, description="Hearability threshold, peak over mean off-peak")
    guard_samples: int = Field(16, ge=1)
    max_range_m: float = Field(10_000.0, gt=0.0)
    doppler_span_hz: float = Field(1000.0, gt=0.0)
    doppler_step_hz: float = Field(100.0, gt=0.0)


class UlaConfig(StrictModel):
    n_elements: int = Field(5, ge=2)
    spacing_wavelengths: float = Field(0.5, gt=0.0, le=0.5)
    snapshots: int = Field(48, ge=1)
    array_axis_deg: float = Field(0.0, description="Direction of the array axis")
    min_snr_db: float = -10.0
    max_snr_db: float = 30.0


class DetectSettings(StrictModel):
    ula: UlaConfig = Field(default_factory=UlaConfig)
    ul_sigma_m: float = Field(3.0, ge=0.0, description="Uplink position error sigma")
    accel_sigma: float = Field(1.0, ge=0.0, description="Tracker process noise, m/s^2")
    meas_sigma_m: float = Field(10.0, gt=0.0, description="Tracker measurement sigma")
    initial_speed_sigma: float = Field(15.0, gt=0.0)


class Thresholds(StrictModel):
    success_m: float = Field(15.0, gt=0.0)
    delta_th_deg: float = Field(20.0, gt=0.0)
    epsilon_m: float = Field(20.0, gt=0.0)
    gate_confidence: float = Field(0.85, gt=0.0, lt=1.0)
    gamma: Optional[float] = Field(None, gt=0.0, description="NIS gate; chi2(2) quantile if unset")
    mofn_m: int = Field(2, ge=1)
    mofn_n: int = Field(2, ge=1)
    reinit_after: Optional[int] = Field(
        2, ge=1, description="Refused fixes before the track may re-seed; never if unset"
    )
    reinit_window: int = Field(3, ge=3, description="Fixes used to re-seed the track")

    @model_validator(mode="after")
    def _resolve(self) -> "Thresholds":
        if self.mofn_m > self.mofn_n:
            raise ValueError("mofn_m cannot exceed mofn_n")
        if self.gamma is None:
            self.gamma = float(chi2.ppf(self.gate_confidence, df=2))
        return self


class TopologySettings(StrictModel):
    seed: int = 0
    isd_m: float = Field(500.0, gt=0.0)


class SyntheticTrajectory(StrictModel):
    n_points: int = Field(1200, ge=3)
    seed: int = 0
    speed_min_mps: float = Field(5.0, gt=0.0)
    speed_max_mps: float = Field(15.0, gt=0.0)
    segment_s: int = Field(60, ge=1, description="Seconds between heading changes")
    max_turn_deg: float = Field(90.0, ge=0.0, le=180.0)

    @model_validator(mode="after")
    def _speeds(self) -> "SyntheticTrajectory":
        if self.speed_min_mps > self.speed_max_mps:
            raise ValueError("speed_min_mps exceeds speed_max_mps")
        return self


class TrajectorySettings(StrictModel):
    path: Optional[Path] = Field(None, description="CSV trajectory; synthetic if unset")
    synthetic: SyntheticTrajectory = Field(default_factory=SyntheticTrajectory)


class ScenarioConfig(StrictModel):
    """Complete, reproducible description of one scenario run."""

    name: str = "scenario"
    profile: str = Field("test", description="Numerology profile: full or test")
    seed: int = Field(0, ge=0, description="Master seed for noise and per-epoch draws")
    ldpc_seed: int = Field(0, ge=0)
    prs: PrsSettings = Field(default_factory=PrsSettings)
    security: SecurityToggles = Field(default_factory=SecurityToggles)
    keys: KeySettings = Field(default_factory=KeySettings)
    attack: AttackConfig = Field(default_factory=AttackConfig)
    channel: ChannelConfig = Field(default_factory=ChannelConfig)
    receiver: ReceiverSettings = Field(default_factory=ReceiverSettings)
    detect: DetectSettings = Field(default_factory=DetectSettings)
    thresholds: Thresholds = Field(default_factory=Thresholds)
    topology: TopologySettings = Field(default_factory=TopologySettings)
    trajectory: TrajectorySettings = Field(default_factory=TrajectorySettings)

    @field_validator("profile")
    @classmethod
    def _profile(cls, value: str) -> str:
        if value not in ("full", "test"):
            raise ValueError("profile must be 'full' or 'test'")
        return value

    @model_validator(mode="after")
    def _resolve(self) -> "ScenarioConfig":
        if self.attack.power_dbm is None:
            self.attack.power_dbm = self.channel.attacker_power_dbm
        if self.trajectory.path is None:
            n = self.trajectory.synthetic.n_points
            if self.attack.window.attack_end > n:
                raise ValueError(f"attack window ends after the last of {n} epochs")
        return self

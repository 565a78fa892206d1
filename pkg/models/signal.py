"""Signal-level data models: numerology, PRS configuration, grids and IQ."""

from __future__ import annotations

from dataclasses import dataclass
from typing import FrozenSet, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from core.errors import ParameterError
from utils.profiles import get_all_profiles, get_profile, normal_cp_lengths


@dataclass(frozen=True)
class Numerology:
    """OFDM numerology of one carrier."""

    mu: int
    scs_hz: float
    n_fft: int
    n_prb: int
    cp_lengths: Tuple[int, ...]
    symbols_per_slot: int = 14
    slots_per_frame: int = 10

    def __post_init__(self) -> None:
        if self.symbols_per_slot != 14:
            raise ParameterError("only normal cyclic prefix (14 symbols) is supported")
        if len(self.cp_lengths) != self.symbols_per_slot:
            raise ParameterError("one cyclic prefix length per symbol is required")
        if self.n_subcarriers > self.n_fft:
            raise ParameterError(
                f"{self.n_subcarriers} active subcarriers exceed FFT size {self.n_fft}"
            )

    @classmethod
    def from_profile(cls, name: str) -> "Numerology":
        profile = get_profile(name)
        if profile is None:
            raise ParameterError(
                f"unknown profile {name!r}; choose one of {get_all_profiles()}"
            )
        rate = profile["n_fft"] * profile["scs_hz"]
        return cls(
            mu=profile["mu"],
            scs_hz=profile["scs_hz"],
            n_fft=profile["n_fft"],
            n_prb=profile["n_prb"],
            cp_lengths=tuple(normal_cp_lengths(rate)),
            slots_per_frame=10 * 2 ** profile["mu"],
        )

    @property
    def sample_rate_hz(self) -> float:
        return self.n_fft * self.scs_hz

    @property
    def n_subcarriers(self) -> int:
        return 12 * self.n_prb

    @property
    def occupied_bandwidth_hz(self) -> float:
        return self.n_subcarriers * self.scs_hz

    @property
    def slot_samples(self) -> int:
        return sum(self.n_fft + cp for cp in self.cp_lengths)

    @property
    def slot_duration_s(self) -> float:
        return self.slot_samples / self.sample_rate_hz

    def symbol_starts(self) -> np.ndarray:
        """Sample index of each symbol's cyclic prefix within a slot."""
        lengths = np.array([self.n_fft + cp for cp in self.cp_lengths])
        return np.concatenate(([0], np.cumsum(lengths)[:-1]))


class PrsConfig(BaseModel):
    """PRS resource configuration of one base station."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    n_id_seq: int = Field(..., ge=0, le=4095, description="PRS sequence identity")
    k_comb: int = Field(6, description="Comb size")
    k_offset: int = Field(0, ge=0, description="Comb offset")
    num_symbols: int = Field(12, ge=1, description="PRS symbols per slot")
    start_symbol: int = Field(0, ge=0, description="First PRS symbol")
    slots_active: Optional[FrozenSet[int]] = Field(
        None, description="Active slots within a frame; None means every slot"
    )
    stagger: bool = Field(True, description="Apply the per-symbol comb staircase")

    @field_validator("k_comb")
    @classmethod
    def _check_comb(cls, value: int) -> int:
        if value not in (2, 4, 6, 12):
            raise ValueError("k_comb must be one of 2, 4, 6, 12")
        return value

    @model_validator(mode="after")
    def _check_layout(self) -> "PrsConfig":
        if self.k_offset >= self.k_comb:
            raise ValueError("k_offset must be smaller than k_comb")
        if self.start_symbol + self.num_symbols > 14:
            raise ValueError("PRS symbols exceed the slot")
        return self

    def is_active(self, slot: int) -> bool:
        return self.slots_active is None or slot in self.slots_active


@dataclass
class ResourceGrid:
    """One slot of resource elements, subcarrier by OFDM symbol."""

    cells: np.ndarray
    slot_index: int = 0
    frame_index: int = 0

    @classmethod
    def empty(cls, num: Numerology, slot: int = 0, frame: int = 0) -> "ResourceGrid":
        cells = np.zeros((num.n_subcarriers, num.symbols_per_slot), dtype=complex)
        return cls(cells=cells, slot_index=slot, frame_index=frame)

    def copy(self) -> "ResourceGrid":
        return ResourceGrid(self.cells.copy(), self.slot_index, self.frame_index)

    def energy(self) -> float:
        return float(np.sum(np.abs(self.cells) ** 2))


@dataclass
class IqSignal:
    """Complex baseband samples with rate and start-time metadata."""

    samples: np.ndarray
    sample_rate_hz: float
    t0_s: float = 0.0

    def __post_init__(self) -> None:
        self.samples = np.asarray(self.samples, dtype=complex)
        if not np.all(np.isfinite(self.samples)):
            raise ParameterError("IQ samples must be finite")

    def __len__(self) -> int:
        return len(self.samples)

    def power(self) -> float:
        """Mean sample power in linear units (mW at the receiver reference)."""
        if len(self.samples) == 0:
            return 0.0
        return float(np.mean(np.abs(self.samples) ** 2))

    def energy(self) -> float:
        return float(np.sum(np.abs(self.samples) ** 2))

    def times(self) -> np.ndarray:
        return self.t0_s + np.arange(len(self.samples)) / self.sample_rate_hz

    def with_samples(self, samples: np.ndarray) -> "IqSignal":
        return IqSignal(samples, self.sample_rate_hz, self.t0_s)

    def normalized(self) -> "IqSignal":
        """Copy scaled to unit mean power; silence stays silent."""
        p = self.power()
        if p == 0.0:
            return self.with_samples(self.samples.copy())
        return self.with_samples(self.samples / np.sqrt(p))

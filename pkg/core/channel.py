"""Link-level propagation: path loss, delay, Doppler, power control and AWGN."""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence

import numpy as np

from core.errors import ParameterError
from models.scenario import ChannelConfig
from models.signal import IqSignal
from utils.profiles import SPEED_OF_LIGHT, THERMAL_NOISE_DBM_HZ

logger = logging.getLogger(__name__)

MIN_DISTANCE_M = 10.0


@dataclass(frozen=True)
class LinkState:
    distance_3d_m: float
    pathloss_db: float
    delay_s: float
    doppler_hz: float
    tx_power_dbm: float

    @property
    def rx_power_dbm(self) -> float:
        return self.tx_power_dbm - self.pathloss_db


def uma_pathloss_db(d3d_m: float, fc_ghz: float, min_distance_m: float = MIN_DISTANCE_M) -> float:
    """LOS close-in urban-macro path loss in dB."""
    if d3d_m < min_distance_m:
        logger.warning("link distance %.2f m clamped to %.1f m", d3d_m, min_distance_m)
        d3d_m = min_distance_m
    return 28.0 + 22.0 * np.log10(d3d_m) + 20.0 * np.log10(fc_ghz)


def doppler_hz(ue_velocity: Sequence[float], bearing_to_bs: float, fc_hz: float) -> float:
    """Doppler of a receiver moving with ``ue_velocity`` toward bearing (radians)."""
    u = np.array([np.cos(bearing_to_bs), np.sin(bearing_to_bs)])
    return float(np.dot(np.asarray(ue_velocity, dtype=float), u) / SPEED_OF_LIGHT * fc_hz)


def noise_psd_dbm_hz(cfg: ChannelConfig) -> float:
    return THERMAL_NOISE_DBM_HZ + cfg.noise_figure_db


def noise_power_dbm(cfg: ChannelConfig, bandwidth_hz: float) -> float:
    return noise_psd_dbm_hz(cfg) + 10.0 * np.log10(bandwidth_hz)


def make_link(
    tx_xy: Sequence[float],
    rx_xy: Sequence[float],
    cfg: ChannelConfig,
    tx_height_m: float,
    rx_height_m: float,
    tx_power_dbm: float = 0.0,
    rx_velocity: Sequence[float] = (0.0, 0.0),
    tx_velocity: Sequence[float] = (0.0, 0.0),
) -> LinkState:
    """Geometry-derived link; Doppler follows the relative radial velocity."""
    d = np.asarray(tx_xy, dtype=float) - np.asarray(rx_xy, dtype=float)
    d2 = float(np.hypot(d[0], d[1]))
    d3 = float(np.hypot(d2, tx_height_m - rx_height_m))
    bearing = float(np.arctan2(d[1], d[0]))
    rel_v = np.asarray(rx_velocity, dtype=float) - np.asarray(tx_velocity, dtype=float)
    return LinkState(
        distance_3d_m=d3,
        pathloss_db=float(uma_pathloss_db(d3, cfg.fc_hz / 1e9, cfg.min_distance_m)),
        delay_s=d3 / SPEED_OF_LIGHT,
        doppler_hz=doppler_hz(rel_v, bearing, cfg.fc_hz),
        tx_power_dbm=tx_power_dbm,
    )


def power_control(
    links: List[LinkState], target_dbm: Optional[float], cap_dbm: float
) -> List[LinkState]:
    """Equalise received power at ``target_dbm``, clamping transmit power at the cap.

    With no explicit target the weakest link at the cap sets the common level.
    """
    if not links:
        raise ParameterError("power control needs at least one link")
    if target_dbm is None:
        target_dbm = cap_dbm - max(link.pathloss_db for link in links)
    return [
        replace(link, tx_power_dbm=min(target_dbm + link.pathloss_db, cap_dbm)) for link in links
    ]


def apply_link(sig: IqSignal, link: LinkState, reference_dbm: float = 0.0) -> IqSignal:
    """Scale, delay by whole samples and Doppler-rotate a unit-referenced waveform.

    The output is ``round(delay*fs)`` samples longer than the input; t0 is kept.
    """
    gain = 10.0 ** ((link.tx_power_dbm - link.pathloss_db - reference_dbm) / 20.0)
    k = int(round(link.delay_s * sig.sample_rate_hz))
    out = np.concatenate((np.zeros(k, dtype=complex), sig.samples * gain))
    if link.doppler_hz:
        t = sig.t0_s + np.arange(out.size) / sig.sample_rate_hz
        out = out * np.exp(2j * np.pi * link.doppler_hz * t)
    return IqSignal(out, sig.sample_rate_hz, sig.t0_s)


def complex_noise(n: int, power: float, rng: np.random.Generator) -> np.ndarray:
    """Circularly-symmetric complex Gaussian samples of mean power ``power``."""
    scale = np.sqrt(power / 2.0)
    return scale * (rng.standard_normal(n) + 1j * rng.standard_normal(n))


def superpose_with_noise(
    signals: List[IqSignal],
    noise_psd_dbm_hz: float,
    bandwidth_hz: float,
    rng_seed: int,
    n_samples: Optional[int] = None,
    sample_rate_hz: Optional[float] = None,
) -> IqSignal:
    """Sum aligned signals and add AWGN of total power N0*B (in mW).

    The output spans ``n_samples`` (default: the longest input); shorter
    inputs are zero-padded and longer ones truncated.
    """
    rates = {s.sample_rate_hz for s in signals}
    if sample_rate_hz is not None:
        rates.add(sample_rate_hz)
    if len(rates) != 1:
        raise ParameterError(f"sample-rate mismatch or missing rate: {sorted(rates)}")
    fs = rates.pop()
    if n_samples is None:
        if not signals:
            raise ParameterError("n_samples is required when no signals are given")
        n_samples = max(len(s) for s in signals)

    total = np.zeros(n_samples, dtype=complex)
    for s in signals:
        m = min(len(s), n_samples)
        total[:m] += s.samples[:m]

    rng = np.random.default_rng(rng_seed)
    if np.isfinite(noise_psd_dbm_hz):
        power_mw = 10.0 ** ((noise_psd_dbm_hz + 10.0 * np.log10(bandwidth_hz)) / 10.0)
        total += complex_noise(n_samples, power_mw, rng)
    t0 = signals[0].t0_s if signals else 0.0
    return IqSignal(total, fs, t0)

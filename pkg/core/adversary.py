"""Attack waveforms: false-base-station spoofing, meaconing and jamming."""

from __future__ import annotations

from typing import List, Optional, Sequence

import numpy as np
from scipy import fft as sfft

from core.channel import complex_noise
from core.errors import ParameterError
from core.prs_grid import generate_prs_grid, slot_waveform
from models.signal import IqSignal, Numerology, PrsConfig
from utils.profiles import SPEED_OF_LIGHT


def attacker_position(ue_trajectory: Sequence, epoch: int, lag_points: int) -> np.ndarray:
    """Position of an attacker trailing the UE by ``lag_points`` trajectory points."""
    point = ue_trajectory[max(0, epoch - lag_points)]
    return np.asarray(getattr(point, "xy_m", point), dtype=float)


def attacker_velocity(ue_trajectory: Sequence, epoch: int, lag_points: int) -> np.ndarray:
    point = ue_trajectory[max(0, epoch - lag_points)]
    return np.asarray(point.velocity_mps, dtype=float)


def fbs_spoof_delays(
    fake_position: Sequence[float],
    bs_positions: Sequence[Sequence[float]],
    attacker_position: Sequence[float],
) -> np.ndarray:
    """Per-replica transmit delays (s) reproducing the RSTDs seen at ``fake_position``.

    The first BS is the reference; its replica is aligned with the attacker's
    own reception of that BS. Any negative delay shifts the whole set by a
    common constant, which leaves every RSTD unchanged.
    """
    fake = np.asarray(fake_position, dtype=float)
    bs = np.asarray(bs_positions, dtype=float).reshape(-1, 2)
    if bs.size == 0:
        return np.zeros(0)
    own = np.linalg.norm(np.asarray(attacker_position, dtype=float) - bs[0])
    delays = (np.linalg.norm(bs - fake, axis=1) - own) / SPEED_OF_LIGHT
    if delays.min() < 0:
        delays = delays - delays.min()
    return delays


def gen_fbs_waveform(
    targets: List[PrsConfig],
    delays: Sequence[float],
    num: Numerology,
    frame: int = 0,
    n_slots: int = 1,
) -> IqSignal:
    """Sum of delayed standard-PRS replicas, one per spoofed BS."""
    if len(delays) != len(targets):
        raise ParameterError(f"{len(delays)} delays given for {len(targets)} spoofed BSs")
    if any(d < 0 for d in delays):
        raise ParameterError("spoofing delays must be non-negative")
    if not targets:
        return IqSignal(np.zeros(0, dtype=complex), num.sample_rate_hz)
    shifts = [int(round(d * num.sample_rate_hz)) for d in delays]
    replicas = [
        slot_waveform([generate_prs_grid(cfg, num, s, frame) for s in range(n_slots)], num)
        for cfg in targets
    ]
    out = np.zeros(len(replicas[0]) + max(shifts), dtype=complex)
    for rep, k in zip(replicas, shifts):
        out[k : k + len(rep)] += rep.samples
    return IqSignal(out, num.sample_rate_hz, replicas[0].t0_s)


def gen_meacon_waveform(composite_at_attacker: IqSignal, gain_db: float, delay_s: float) -> IqSignal:
    """Amplified copy of the captured composite behind a common delay."""
    k = int(round(delay_s * composite_at_attacker.sample_rate_hz))
    out = np.concatenate(
        (np.zeros(k, dtype=complex), composite_at_attacker.samples * 10.0 ** (gain_db / 20.0))
    )
    return IqSignal(out, composite_at_attacker.sample_rate_hz, composite_at_attacker.t0_s)


def gen_jam_waveform(
    duration_samples: int,
    power_dbm: float,
    rng_seed: int,
    sample_rate_hz: float = 1.0,
    bandwidth_hz: Optional[float] = None,
    t0_s: float = 0.0,
) -> IqSignal:
    """Complex Gaussian noise at ``power_dbm``, optionally confined to a centred band."""
    if duration_samples < 1:
        raise ParameterError("jamming duration must be at least one sample")
    rng = np.random.default_rng(rng_seed)
    power = 10.0 ** (power_dbm / 10.0)
    noise = complex_noise(duration_samples, 1.0, rng)
    if bandwidth_hz is not None and bandwidth_hz < sample_rate_hz:
        freqs = sfft.fftfreq(duration_samples, d=1.0 / sample_rate_hz)
        spectrum = sfft.fft(noise)
        spectrum[np.abs(freqs) > bandwidth_hz / 2.0] = 0.0
        noise = sfft.ifft(spectrum)
        noise /= np.sqrt(np.mean(np.abs(noise) ** 2))
    return IqSignal(noise * np.sqrt(power), sample_rate_hz, t0_s)

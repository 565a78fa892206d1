"""Correlation receiver: Doppler scan, ToA, hearability, RSTD and residual CFO."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import fft as sfft

from core.channel import complex_noise
from core.errors import MeasurementUnavailable, ParameterError
from core.prs_grid import ofdm_demodulate
from models.scenario import ReceiverSettings
from models.signal import IqSignal, Numerology, ResourceGrid
from utils.profiles import SPEED_OF_LIGHT

logger = logging.getLogger(__name__)

DEFAULT_KAPPA_DB = 11.5
DEFAULT_GUARD = 16


@dataclass
class ToaMeasurement:
    bs_id: int
    sample_index: int
    peak_value: complex
    peak_to_floor_db: float
    detected: bool
    doppler_hz: float = 0.0
    cfo_hz: float = 0.0

    @property
    def frequency_hz(self) -> float:
        """Total frequency offset to remove before demodulation."""
        return self.doppler_hz + self.cfo_hz


@dataclass
class RstdSet:
    reference_bs: int
    values_s: Dict[int, float]


@dataclass(frozen=True)
class DopplerEstimate:
    freq_hz: float
    at_edge: bool = False


@dataclass(frozen=True)
class CfoEstimate:
    freq_hz: float
    single_slot: bool = False


def cross_correlate(sig: np.ndarray, replica: np.ndarray, max_lag: Optional[int] = None) -> np.ndarray:
    """c[t] = sum_k conj(replica[k]) * sig[t + k] for t in [0, max_lag)."""
    if len(replica) > len(sig):
        raise ParameterError("replica is longer than the signal")
    if max_lag is None:
        max_lag = len(sig) - len(replica) + 1
    nfft = sfft.next_fast_len(len(sig) + len(replica))
    spectrum = sfft.fft(sig, nfft) * np.conj(sfft.fft(replica, nfft))
    return sfft.ifft(spectrum)[:max_lag]


def _peak_and_floor(power: np.ndarray, guard: int) -> Tuple[int, float]:
    peak = int(np.argmax(power))
    lags = np.arange(power.size)
    off_peak = power[np.abs(lags - peak) > guard]
    floor = float(off_peak.mean()) if off_peak.size else 0.0
    return peak, floor


def toa_estimate(
    sig: IqSignal,
    replica: IqSignal,
    bs_id: int = 0,
    kappa_db: float = DEFAULT_KAPPA_DB,
    guard: int = DEFAULT_GUARD,
    max_lag: Optional[int] = None,
) -> ToaMeasurement:
    """Correlation-peak ToA with a peak-over-mean-off-peak hearability test."""
    corr = cross_correlate(sig.samples, replica.samples, max_lag)
    power = np.abs(corr) ** 2
    peak, floor = _peak_and_floor(power, guard)
    if power[peak] <= 0.0:
        ratio_db = -np.inf
    elif floor <= 0.0:
        ratio_db = np.inf
    else:
        ratio_db = 10.0 * np.log10(power[peak] / floor)
    return ToaMeasurement(
        bs_id=bs_id,
        sample_index=peak,
        peak_value=complex(corr[peak]),
        peak_to_floor_db=float(ratio_db),
        detected=bool(ratio_db >= kappa_db),
    )


def parabolic_vertex(freqs: Sequence[float], metrics: Sequence[float]) -> float:
    """Vertex of the parabola through three equally spaced points."""
    f_lo, f_mid, f_hi = freqs
    m_lo, m_mid, m_hi = metrics
    denom = m_lo - 2.0 * m_mid + m_hi
    if denom == 0.0:
        return float(f_mid)
    return float(f_mid + 0.5 * (m_lo - m_hi) / denom * (f_hi - f_mid))


def derotate(samples: np.ndarray, freq_hz: float, sample_rate_hz: float) -> np.ndarray:
    n = np.arange(len(samples))
    return samples * np.exp(-2j * np.pi * freq_hz * n / sample_rate_hz)


def coarse_doppler_estimate(
    sig: IqSignal,
    replica: IqSignal,
    grid_hz: Sequence[float],
    max_lag: Optional[int] = None,
) -> DopplerEstimate:
    """Doppler hypothesis maximising the correlation peak, parabola-refined."""
    grid = np.asarray(grid_hz, dtype=float)
    if grid.size < 3:
        raise ParameterError("Doppler grid needs at least three points")
    if max_lag is None:
        max_lag = len(sig) - len(replica) + 1
    nfft = sfft.next_fast_len(len(sig) + len(replica))
    ref = np.conj(sfft.fft(replica.samples, nfft))
    metric = np.empty(grid.size)
    for i, f in enumerate(grid):
        y = sfft.fft(derotate(sig.samples, f, sig.sample_rate_hz), nfft)
        metric[i] = np.max(np.abs(sfft.ifft(y * ref)[:max_lag]) ** 2)

    best = int(np.argmax(metric))
    if best == 0 or best == grid.size - 1:
        logger.warning("Doppler peak at grid edge %.1f Hz", grid[best])
        return DopplerEstimate(float(grid[best]), at_edge=True)
    return DopplerEstimate(parabolic_vertex(grid[best - 1 : best + 2], metric[best - 1 : best + 2]))


def residual_cfo_correct(peaks: Sequence[complex], slot_duration_s: float) -> CfoEstimate:
    """Frequency from the mean phase advance between consecutive slot peaks."""
    p = np.asarray(peaks, dtype=complex)
    if p.size < 2:
        return CfoEstimate(0.0, single_slot=True)
    dphi = np.angle(p[1:] * np.conj(p[:-1]))
    return CfoEstimate(float(np.mean(dphi) / (2.0 * np.pi * slot_duration_s)))


def compute_rstd(toas: List[ToaMeasurement], reference_bs: int, fs: float) -> RstdSet:
    """RSTDs of every detected BS against the reference (or the strongest)."""
    detected = [t for t in toas if t.detected]
    if len(detected) < 2:
        raise MeasurementUnavailable(f"{len(detected)} BS detected, at least 2 required")
    ref = next((t for t in detected if t.bs_id == reference_bs), None)
    if ref is None:
        ref = max(detected, key=lambda t: t.peak_to_floor_db)
        logger.debug("reference BS %d unheard, falling back to BS %d", reference_bs, ref.bs_id)
    return RstdSet(
        reference_bs=ref.bs_id,
        values_s={t.bs_id: (t.sample_index - ref.sample_index) / fs for t in detected},
    )


def equalize_slot(
    sig: IqSignal,
    num: Numerology,
    start: int,
    freq_hz: float,
    pilot_cells: Tuple[np.ndarray, np.ndarray],
    pilots: np.ndarray,
) -> Tuple[ResourceGrid, float]:
    """Demodulate one slot and equalise it with a flat channel fitted on the pilots.

    Returns the equalised grid and the post-equalisation noise variance.
    """
    if start < 0 or start + num.slot_samples > len(sig):
        raise ParameterError("slot window falls outside the received buffer")
    rotated = IqSignal(derotate(sig.samples, freq_hz, sig.sample_rate_hz), sig.sample_rate_hz)
    grid = ofdm_demodulate(rotated, num, start=start)
    ks, ls = pilot_cells
    y = grid.cells[ks, ls]
    h = np.vdot(pilots, y) / np.vdot(pilots, pilots)
    if h == 0:
        return ResourceGrid(np.zeros_like(grid.cells)), np.inf
    noise_var = float(np.mean(np.abs(y - h * pilots) ** 2) / np.abs(h) ** 2)
    return ResourceGrid(grid.cells / h, grid.slot_index, grid.frame_index), noise_var


class PositioningReceiver:
    """Per-BS measurement chain of one UE."""

    def __init__(self, num: Numerology, settings: Optional[ReceiverSettings] = None):
        self.num = num
        self.settings = settings or ReceiverSettings()
        self.max_lag = int(np.ceil(self.settings.max_range_m / SPEED_OF_LIGHT * num.sample_rate_hz))
        span, step = self.settings.doppler_span_hz, self.settings.doppler_step_hz
        self.doppler_grid = np.arange(-span, span + step / 2.0, step)

    def buffer_samples(self, n_slots: int) -> int:
        """Received samples needed to search the full range window."""
        return n_slots * self.num.slot_samples + self.max_lag

    def measure(self, sig: IqSignal, bs_id: int, replica_slots: List[IqSignal]) -> ToaMeasurement:
        replica = IqSignal(
            np.concatenate([r.samples for r in replica_slots]), self.num.sample_rate_hz
        )
        doppler = coarse_doppler_estimate(sig, replica, self.doppler_grid, self.max_lag)
        aligned = IqSignal(
            derotate(sig.samples, doppler.freq_hz, sig.sample_rate_hz), sig.sample_rate_hz
        )
        toa = toa_estimate(
            aligned,
            replica,
            bs_id=bs_id,
            kappa_db=self.settings.kappa_db,
            guard=self.settings.guard_samples,
            max_lag=self.max_lag,
        )
        toa.doppler_hz = doppler.freq_hz
        if toa.detected and len(replica_slots) > 1:
            peaks = []
            for s, rep in enumerate(replica_slots):
                offset = toa.sample_index + s * self.num.slot_samples
                peaks.append(np.vdot(rep.samples, aligned.samples[offset : offset + len(rep)]))
            toa.cfo_hz = residual_cfo_correct(peaks, self.num.slot_duration_s).freq_hz
        return toa

    def measure_all(self, sig: IqSignal, replicas: Dict[int, List[IqSignal]]) -> List[ToaMeasurement]:
        return [self.measure(sig, bs_id, slots) for bs_id, slots in replicas.items()]


@dataclass(frozen=True)
class HearabilityCalibration:
    kappa_db: float
    false_rate_at_configured: float
    trials: int


def calibrate_hearability(
    replica: IqSignal,
    buffer_samples: int,
    trials: int = 1000,
    false_rate: float = 0.01,
    guard: int = DEFAULT_GUARD,
    max_lag: Optional[int] = None,
    configured_kappa_db: float = DEFAULT_KAPPA_DB,
    seed: int = 0,
) -> HearabilityCalibration:
    """Monte-Carlo pure-noise calibration of the hearability threshold.

    The threshold is the (1 - false_rate) quantile of the peak-to-floor ratio
    observed on noise-only buffers.
    """
    if not 0.0 < false_rate < 1.0:
        raise ParameterError("false_rate must lie in (0, 1)")
    if trials < 1:
        raise ParameterError("at least one trial is required")
    rng = np.random.default_rng(seed)
    ratios = np.empty(trials)
    for i in range(trials):
        noise = complex_noise(buffer_samples, 1.0, rng)
        toa = toa_estimate(
            IqSignal(noise, replica.sample_rate_hz),
            replica,
            kappa_db=configured_kappa_db,
            guard=guard,
            max_lag=max_lag,
        )
        ratios[i] = toa.peak_to_floor_db
    return HearabilityCalibration(
        kappa_db=float(np.quantile(ratios, 1.0 - false_rate)),
        false_rate_at_configured=float(np.mean(ratios >= configured_kappa_db)),
        trials=trials,
    )

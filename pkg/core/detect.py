"""Non-cryptographic integrity checks: angle-of-arrival gate and DL-UL handshake."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from core.channel import complex_noise
from core.errors import ParameterError
from models.scenario import UlaConfig
from models.verdict import DetectionVerdict, Technique

logger = logging.getLogger(__name__)

RANK_TOLERANCE = 1e-10


@dataclass(frozen=True)
class AngleGate:
    theta_ref_deg: float
    delta_th_deg: float = 20.0

    def __post_init__(self) -> None:
        if self.delta_th_deg <= 0:
            raise ParameterError("angular tolerance must be positive")


@dataclass(frozen=True)
class HandshakeGate:
    epsilon_m: float = 20.0
    ul_sigma_m: float = 3.0

    def __post_init__(self) -> None:
        if self.epsilon_m <= 0:
            raise ParameterError("handshake tolerance must be positive")
        if self.ul_sigma_m < 0:
            raise ParameterError("uplink sigma cannot be negative")


@dataclass(frozen=True)
class AoaEstimate:
    """Signed broadside angles in degrees; ``failed`` marks a rank-deficient covariance."""

    angles_deg: Tuple[float, ...] = field(default_factory=tuple)
    failed: bool = False


def steering_vector(theta_deg: float, ula: UlaConfig) -> np.ndarray:
    m = np.arange(ula.n_elements)
    return np.exp(2j * np.pi * ula.spacing_wavelengths * m * np.sin(np.deg2rad(theta_deg)))


def ula_snapshots(
    incident_signals: Sequence[Tuple[np.ndarray, float]],
    ula: UlaConfig,
    noise_var: float,
    rng_seed: int,
) -> np.ndarray:
    """Array output (elements x snapshots) for sources given as (amplitudes, angle_deg)."""
    if not incident_signals:
        raise ParameterError("at least one incident source is required")
    n_snap = len(incident_signals[0][0])
    if n_snap < 1:
        raise ParameterError("at least one snapshot is required")
    x = np.zeros((ula.n_elements, n_snap), dtype=complex)
    for amplitudes, theta_deg in incident_signals:
        s = np.asarray(amplitudes, dtype=complex)
        if s.size != n_snap:
            raise ParameterError("all sources need the same number of snapshots")
        x += np.outer(steering_vector(theta_deg, ula), s)
    if noise_var > 0:
        rng = np.random.default_rng(rng_seed)
        x += complex_noise(x.size, noise_var, rng).reshape(x.shape)
    return x


def esprit_azimuth(
    snapshots: np.ndarray, n_sources: int = 1, spacing_wavelengths: float = 0.5
) -> AoaEstimate:
    """Least-squares ESPRIT over the two maximally overlapping sub-arrays."""
    x = np.asarray(snapshots, dtype=complex)
    n_elements, n_snap = x.shape
    if n_snap < n_sources or n_elements <= n_sources:
        raise ParameterError("need more elements than sources and snapshots >= sources")
    r = x @ x.conj().T / n_snap
    eigvals, eigvecs = np.linalg.eigh(r)
    order = np.argsort(eigvals)[::-1]
    eigvals, eigvecs = eigvals[order], eigvecs[:, order]
    if eigvals[0] <= 0 or eigvals[n_sources - 1] <= RANK_TOLERANCE * eigvals[0]:
        return AoaEstimate(failed=True)
    es = eigvecs[:, :n_sources]
    phi, *_ = np.linalg.lstsq(es[:-1], es[1:], rcond=None)
    rotations = np.linalg.eigvals(phi)
    sines = np.clip(np.angle(rotations) / (2.0 * np.pi * spacing_wavelengths), -1.0, 1.0)
    return AoaEstimate(angles_deg=tuple(sorted(np.rad2deg(np.arcsin(sines)).tolist())))


def angular_deviation(theta_deg: float, theta_ref_deg: float, period_deg: float = 180.0) -> float:
    """Circular distance between broadside angles.

    A half-wavelength array sees +90 and -90 degrees as the same steering
    vector, so broadside angles wrap with a 180 degree period.
    """
    half = period_deg / 2.0
    return abs((theta_deg - theta_ref_deg + half) % period_deg - half)


def absa_check(theta_deg: Optional[float], gate: AngleGate) -> DetectionVerdict:
    if theta_deg is None:
        return DetectionVerdict(
            technique=Technique.ABSA, valid=False, reason="estimation-failed"
        )
    deviation = angular_deviation(theta_deg, gate.theta_ref_deg)
    return DetectionVerdict(
        technique=Technique.ABSA,
        valid=deviation <= gate.delta_th_deg,
        reason=None if deviation <= gate.delta_th_deg else "angle-deviation",
        diagnostics={"theta_deg": theta_deg, "deviation_deg": deviation},
    )


def absa_check_all(
    estimates: Sequence[AoaEstimate], gates: Sequence[AngleGate]
) -> DetectionVerdict:
    """Joint verdict over the serving BSs; any failing gate invalidates the epoch.

    Diagnostics carry the worst deviation and the azimuth that produced it.
    """
    verdicts: List[DetectionVerdict] = []
    for est, gate in zip(estimates, gates):
        theta = None if est.failed or not est.angles_deg else est.angles_deg[0]
        verdicts.append(absa_check(theta, gate))
    failed = [v for v in verdicts if not v.valid]
    scored = [v for v in verdicts if "deviation_deg" in v.diagnostics]
    diagnostics = {}
    if scored:
        worst = max(scored, key=lambda v: v.diagnostics["deviation_deg"])
        diagnostics = {
            "max_deviation_deg": worst.diagnostics["deviation_deg"],
            "threat_theta_deg": worst.diagnostics["theta_deg"],
        }
    return DetectionVerdict(
        technique=Technique.ABSA,
        valid=not failed,
        reason=failed[0].reason if failed else None,
        diagnostics=diagnostics,
    )


def broadside_angle(bearing_rad: float, array_axis_deg: float = 0.0) -> float:
    """Signed angle from broadside, in degrees, of a source at ``bearing_rad``."""
    return float(np.rad2deg(np.arcsin(np.cos(bearing_rad - np.deg2rad(array_axis_deg)))))


def reference_angle(
    last_valid_position: Sequence[float],
    bs_position: Sequence[float],
    array_axis_deg: float = 0.0,
) -> float:
    d = np.asarray(bs_position, dtype=float) - np.asarray(last_valid_position, dtype=float)
    if not np.any(d):
        raise ParameterError("UE and BS positions coincide")
    return broadside_angle(float(np.arctan2(d[1], d[0])), array_axis_deg)


def source_snapshots(
    theta_deg: float, snr_db: float, ula: UlaConfig, rng_seed: int
) -> np.ndarray:
    """Unit-noise snapshots of one QPSK source at the clipped array SNR."""
    rng = np.random.default_rng(rng_seed)
    snr_db = float(np.clip(snr_db, ula.min_snr_db, ula.max_snr_db))
    phases = rng.integers(0, 4, ula.snapshots)
    amplitudes = np.sqrt(10.0 ** (snr_db / 10.0)) * np.exp(1j * (np.pi / 4 + np.pi / 2 * phases))
    return ula_snapshots([(amplitudes, theta_deg)], ula, 1.0, rng_seed + 1)


def ul_position_model(
    true_position: Sequence[float], gate: HandshakeGate, rng_seed: int
) -> np.ndarray:
    """Network-side uplink fix: truth plus isotropic Gaussian error."""
    rng = np.random.default_rng(rng_seed)
    return np.asarray(true_position, dtype=float) + gate.ul_sigma_m * rng.standard_normal(2)


def handshake_check(
    p_dl: Optional[Sequence[float]], p_ul: Sequence[float], gate: HandshakeGate
) -> DetectionVerdict:
    if p_dl is None:
        return DetectionVerdict(
            technique=Technique.HANDSHAKE, valid=False, reason="no-downlink-position"
        )
    distance = float(np.linalg.norm(np.asarray(p_dl, dtype=float) - np.asarray(p_ul, dtype=float)))
    valid = distance <= gate.epsilon_m
    return DetectionVerdict(
        technique=Technique.HANDSHAKE,
        valid=valid,
        reason=None if valid else "position-mismatch",
        diagnostics={"dl_ul_distance_m": distance},
    )

"""Constant-velocity Kalman tracker with NIS gating and M-of-N reacquisition."""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Deque, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import chi2

from core.errors import ParameterError
from models.verdict import DetectionVerdict, Technique

logger = logging.getLogger(__name__)

H = np.array([[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]])


def gate_threshold(confidence: float, dof: int = 2) -> float:
    return float(chi2.ppf(confidence, df=dof))


DEFAULT_GAMMA = gate_threshold(0.85)
RESEED_CONFIDENCE = 0.99


@dataclass(frozen=True)
class TrackState:
    x: np.ndarray
    P: np.ndarray
    gate_gamma: float = DEFAULT_GAMMA
    consecutive_valid: int = 0
    coasting: bool = False
    recent_passes: Tuple[bool, ...] = field(default_factory=tuple)

    @classmethod
    def initial(
        cls,
        z: Sequence[float],
        meas_sigma: float,
        speed_sigma: float,
        gate_gamma: float = DEFAULT_GAMMA,
    ) -> "TrackState":
        """Track started at ``z`` with zero velocity."""
        x = np.array([z[0], z[1], 0.0, 0.0], dtype=float)
        P = np.diag([meas_sigma**2, meas_sigma**2, speed_sigma**2, speed_sigma**2])
        return cls(x=x, P=P, gate_gamma=gate_gamma, consecutive_valid=1)


def transition(dt_s: float) -> np.ndarray:
    F = np.eye(4)
    F[0, 2] = F[1, 3] = dt_s
    return F


def white_accel_noise(dt_s: float, accel_sigma: float) -> np.ndarray:
    q = np.array([[dt_s**4 / 4.0, dt_s**3 / 2.0], [dt_s**3 / 2.0, dt_s**2]]) * accel_sigma**2
    Q = np.zeros((4, 4))
    for axis in (0, 1):
        idx = np.ix_([axis, axis + 2], [axis, axis + 2])
        Q[idx] = q
    return Q


def kf_predict(ts: TrackState, dt_s: float, accel_sigma: float) -> TrackState:
    if dt_s <= 0:
        raise ParameterError("prediction interval must be positive")
    F = transition(dt_s)
    P = F @ ts.P @ F.T + white_accel_noise(dt_s, accel_sigma)
    return replace(ts, x=F @ ts.x, P=0.5 * (P + P.T))


def compute_nis(innovation: np.ndarray, innovation_cov: np.ndarray) -> float:
    try:
        return float(innovation @ np.linalg.solve(innovation_cov, innovation))
    except np.linalg.LinAlgError:
        return float("inf")


def _joseph_update(ts: TrackState, z: np.ndarray, R: np.ndarray) -> TrackState:
    S = H @ ts.P @ H.T + R
    K = np.linalg.solve(S, H @ ts.P).T
    I_KH = np.eye(4) - K @ H
    P = I_KH @ ts.P @ I_KH.T + K @ R @ K.T
    return replace(ts, x=ts.x + K @ (z - H @ ts.x), P=0.5 * (P + P.T))


def mofn_reacquire(ts: TrackState, gate_passes: bool, m: int = 2, n: int = 2) -> TrackState:
    """Record one gate outcome while coasting; leave coasting once the
    current epoch passes and at least ``m`` of the last ``n`` passed."""
    window = (ts.recent_passes + (gate_passes,))[-n:]
    consecutive = ts.consecutive_valid + 1 if gate_passes else 0
    resume = gate_passes and sum(window) >= m
    return replace(
        ts,
        recent_passes=() if resume else window,
        consecutive_valid=consecutive,
        coasting=not resume,
    )


def kf_update_gated(
    ts: TrackState,
    z: Optional[Sequence[float]],
    meas_sigma: float,
    m: int = 2,
    n: int = 2,
) -> Tuple[TrackState, DetectionVerdict]:
    """NIS-gated measurement update; rejected or absent measurements coast."""
    if z is None:
        coasted = replace(
            ts,
            coasting=True,
            consecutive_valid=0,
            recent_passes=(ts.recent_passes + (False,))[-n:] if ts.coasting else (False,),
        )
        return coasted, DetectionVerdict(
            technique=Technique.TRACKING, valid=False, reason="no-measurement"
        )

    z_arr = np.asarray(z, dtype=float)
    R = np.eye(2) * meas_sigma**2
    innovation = z_arr - H @ ts.x
    nis = compute_nis(innovation, H @ ts.P @ H.T + R)
    passes = nis <= ts.gate_gamma
    diagnostics = {"nis": nis, "trace_p": float(np.trace(ts.P))}

    if ts.coasting:
        ts = mofn_reacquire(ts, passes, m, n)
        if ts.coasting:
            return ts, DetectionVerdict(
                technique=Technique.TRACKING,
                valid=False,
                reason="reacquiring" if passes else "gate-rejected",
                diagnostics=diagnostics,
            )
        logger.debug("track reacquired after %d passing epochs", ts.consecutive_valid)
        return _joseph_update(ts, z_arr, R), DetectionVerdict(
            technique=Technique.TRACKING, valid=True, diagnostics=diagnostics
        )

    if not passes:
        coasted = replace(ts, coasting=True, consecutive_valid=0, recent_passes=(False,))
        return coasted, DetectionVerdict(
            technique=Technique.TRACKING,
            valid=False,
            reason="gate-rejected",
            diagnostics=diagnostics,
        )
    updated = replace(_joseph_update(ts, z_arr, R), consecutive_valid=ts.consecutive_valid + 1)
    return updated, DetectionVerdict(
        technique=Technique.TRACKING, valid=True, diagnostics=diagnostics
    )


def fit_constant_velocity(
    fixes: Sequence[Sequence[float]], dt_s: float, meas_sigma: float
) -> Tuple[np.ndarray, np.ndarray, float]:
    """Least-squares constant-velocity fit ending at the last fix.

    Returns the state at the last fix, its covariance, and the normalised
    residual sum of squares, which is chi-square with ``2 * (len(fixes) - 2)``
    degrees of freedom when the fixes follow a straight constant-speed path.
    """
    k = len(fixes)
    if k < 3:
        raise ParameterError("a constant-velocity fit needs at least 3 fixes")
    t = dt_s * (np.arange(k) - (k - 1))
    A = np.column_stack([np.ones(k), t])
    Z = np.asarray(fixes, dtype=float)
    coef, *_ = np.linalg.lstsq(A, Z, rcond=None)
    residual = Z - A @ coef
    stat = float(np.sum(residual**2)) / meas_sigma**2
    cov = np.linalg.inv(A.T @ A) * meas_sigma**2
    x = np.array([coef[0, 0], coef[0, 1], coef[1, 0], coef[1, 1]])
    P = np.zeros((4, 4))
    for axis in (0, 1):
        P[np.ix_([axis, axis + 2], [axis, axis + 2])] = cov
    return x, P, stat


def reseed_track(
    fixes: Sequence[Sequence[float]],
    dt_s: float,
    meas_sigma: float,
    gate_gamma: float = DEFAULT_GAMMA,
    confidence: float = RESEED_CONFIDENCE,
) -> Optional[TrackState]:
    """New track from recent fixes, or None if they disagree kinematically."""
    if len(fixes) < 3:
        return None
    x, P, stat = fit_constant_velocity(fixes, dt_s, meas_sigma)
    if stat > gate_threshold(confidence, dof=2 * (len(fixes) - 2)):
        return None
    return TrackState(x=x, P=P, gate_gamma=gate_gamma, consecutive_valid=len(fixes))


class InnovationGatedTracker:
    """Sequential tracker driven once per epoch.

    A track that keeps rejecting fixes is re-seeded from the last
    ``reinit_window`` fixes once ``reinit_after`` consecutive fixes were
    refused and those fixes fit one constant-velocity path. A missing
    measurement breaks the run of fixes. ``reinit_after=None`` disables
    re-seeding.
    """

    def __init__(
        self,
        meas_sigma: float = 10.0,
        accel_sigma: float = 1.0,
        gamma: float = DEFAULT_GAMMA,
        speed_sigma: float = 15.0,
        m: int = 2,
        n: int = 2,
        dt_s: float = 1.0,
        reinit_after: Optional[int] = 2,
        reinit_window: int = 3,
    ):
        if m > n:
            raise ParameterError("M cannot exceed N")
        if reinit_after is not None and reinit_after < 1:
            raise ParameterError("reinit_after must be at least 1")
        if reinit_window < 3:
            raise ParameterError("reinit_window must be at least 3")
        self.meas_sigma = meas_sigma
        self.accel_sigma = accel_sigma
        self.gamma = gamma
        self.speed_sigma = speed_sigma
        self.m, self.n = m, n
        self.dt_s = dt_s
        self.reinit_after = reinit_after
        self.state: Optional[TrackState] = None
        self._fixes: Deque[Tuple[float, float]] = deque(maxlen=reinit_window)
        self._rejections = 0

    def step(self, z: Optional[Sequence[float]]) -> DetectionVerdict:
        if self.state is None:
            if z is None:
                return DetectionVerdict(
                    technique=Technique.TRACKING, valid=False, reason="no-measurement"
                )
            self.state = TrackState.initial(z, self.meas_sigma, self.speed_sigma, self.gamma)
            return DetectionVerdict(
                technique=Technique.TRACKING, valid=True, diagnostics={"nis": 0.0}
            )
        predicted = kf_predict(self.state, self.dt_s, self.accel_sigma)
        self.state, verdict = kf_update_gated(predicted, z, self.meas_sigma, self.m, self.n)
        if z is None:
            self._fixes.clear()
            self._rejections = 0
            return verdict
        self._fixes.append((float(z[0]), float(z[1])))
        if verdict.valid:
            self._rejections = 0
            return verdict
        self._rejections += 1
        if self.reinit_after is None or self._rejections < self.reinit_after:
            return verdict
        reseeded = reseed_track(list(self._fixes), self.dt_s, self.meas_sigma, self.gamma)
        if reseeded is None:
            return verdict
        logger.debug("track re-seeded after %d refused fixes", self._rejections)
        self.state = reseeded
        self._rejections = 0
        return DetectionVerdict(
            technique=Technique.TRACKING,
            valid=True,
            diagnostics={**verdict.diagnostics, "reseeded": 1.0},
        )

"""Hyperbolic multilateration from RSTDs and outcome classification."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from core.receiver import RstdSet
from models.verdict import OutcomeClass, OutcomeKind
from utils.profiles import SPEED_OF_LIGHT

logger = logging.getLogger(__name__)

SUCCESS_THRESHOLD_M = 15.0
MAX_ITERATIONS = 50
STEP_TOLERANCE_M = 1e-3
MAX_STEP_HALVINGS = 8


@dataclass(frozen=True)
class PositionEstimate:
    xy_m: np.ndarray
    residual_norm: float
    converged: bool
    n_bs_used: int


def _residuals(
    p: np.ndarray, ranges: np.ndarray, anchors: np.ndarray, ref: np.ndarray
) -> np.ndarray:
    return ranges - (np.linalg.norm(anchors - p, axis=1) - np.linalg.norm(ref - p))


def _jacobian(p: np.ndarray, anchors: np.ndarray, ref: np.ndarray) -> np.ndarray:
    d_i = anchors - p
    d_ref = ref - p
    n_i = np.linalg.norm(d_i, axis=1, keepdims=True)
    n_ref = np.linalg.norm(d_ref)
    # unit vectors toward each anchor; d|a - p|/dp = -(a - p)/|a - p|
    return d_i / n_i - d_ref / n_ref


def _failed(n_bs: int, p: np.ndarray) -> PositionEstimate:
    return PositionEstimate(xy_m=p, residual_norm=float("inf"), converged=False, n_bs_used=n_bs)


def multilaterate(
    rstds: RstdSet,
    bs_positions: Mapping[int, Sequence[float]],
    initial_guess: Optional[Sequence[float]] = None,
) -> PositionEstimate:
    """Damped Gauss-Newton on range-difference residuals.

    The initial guess defaults to the centroid of the BSs in ``rstds``.
    """
    ids = [i for i in rstds.values_s if i != rstds.reference_bs]
    n_bs = len(ids) + 1
    anchors_all = np.asarray([bs_positions[i] for i in rstds.values_s], dtype=float)
    p = (
        anchors_all.mean(axis=0)
        if initial_guess is None
        else np.asarray(initial_guess, dtype=float).copy()
    )
    if n_bs < 3:
        return _failed(n_bs, p)

    ref = np.asarray(bs_positions[rstds.reference_bs], dtype=float)
    anchors = np.asarray([bs_positions[i] for i in ids], dtype=float)
    ranges = SPEED_OF_LIGHT * np.asarray([rstds.values_s[i] for i in ids], dtype=float)

    r = _residuals(p, ranges, anchors, ref)
    cost = float(r @ r)
    for iteration in range(MAX_ITERATIONS):
        with np.errstate(divide="ignore", invalid="ignore"):
            jac = _jacobian(p, anchors, ref)
        if not np.all(np.isfinite(jac)):
            logger.debug("non-finite Jacobian at iteration %d", iteration)
            return _failed(n_bs, p)
        step, *_ = np.linalg.lstsq(jac, -r, rcond=None)
        for _ in range(MAX_STEP_HALVINGS + 1):
            candidate = p + step
            r_new = _residuals(candidate, ranges, anchors, ref)
            cost_new = float(r_new @ r_new)
            if np.isfinite(cost_new) and cost_new <= cost:
                break
            step = step / 2.0
        else:
            if np.linalg.norm(step) < STEP_TOLERANCE_M:
                return PositionEstimate(p, float(np.sqrt(cost)), True, n_bs)
            logger.debug("solver diverged at iteration %d", iteration)
            return _failed(n_bs, p)
        p, r, cost = candidate, r_new, cost_new
        if np.linalg.norm(step) < STEP_TOLERANCE_M:
            return PositionEstimate(p, float(np.sqrt(cost)), True, n_bs)
    return _failed(n_bs, p)


def classify_outcome(
    est: Optional[PositionEstimate],
    truth: Sequence[float],
    threshold_m: float = SUCCESS_THRESHOLD_M,
) -> OutcomeClass:
    if est is None or not est.converged:
        return OutcomeClass(kind=OutcomeKind.DOS)
    error = float(np.linalg.norm(est.xy_m - np.asarray(truth, dtype=float)))
    kind = OutcomeKind.SUCCESS if error <= threshold_m else OutcomeKind.LARGE_ERROR
    return OutcomeClass(kind=kind, error_m=error)

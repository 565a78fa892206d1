"""Aggregation of epoch records into outcome shares and detection rates."""

from __future__ import annotations

import logging
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.stats import chi2_contingency

from core.errors import ParameterError
from models.records import EpochRecord, MetricsReport
from models.scenario import Phase, ScenarioConfig
from models.verdict import OutcomeKind, Technique

logger = logging.getLogger(__name__)

BENIGN = "benign"
ATTACK = "attack"
ERROR_PERCENTILES = {"p50": 50.0, "p95": 95.0, "p99_9": 99.9}


def _shares(records: Sequence[EpochRecord]) -> Dict[OutcomeKind, float]:
    n = len(records)
    return {
        kind: (sum(r.outcome.kind == kind for r in records) / n if n else 0.0)
        for kind in OutcomeKind
    }


def _rate(hits: int, total: int) -> Optional[float]:
    return hits / total if total else None


def phase_homogeneity(records: Sequence[EpochRecord]) -> float:
    """Chi-square contingency p-value of outcome counts across phases.

    Rows or columns that are entirely zero are dropped; a table that
    collapses below 2x2 is reported as perfectly homogeneous.
    """
    table = np.array(
        [
            [sum(r.phase == p and r.outcome.kind == k for r in records) for k in OutcomeKind]
            for p in Phase
        ]
    )
    table = table[table.sum(axis=1) > 0][:, table.sum(axis=0) > 0]
    if table.shape[0] < 2 or table.shape[1] < 2:
        return 1.0
    return float(chi2_contingency(table)[1])


def aggregate(records: List[EpochRecord], cfg: ScenarioConfig) -> MetricsReport:
    """Outcome shares per phase and per-technique decision statistics.

    A verdict is correct when it is valid on a non-attacked epoch or invalid
    on an attacked one. Non-attacked DoS epochs are left out of the benign
    condition, so low signal quality is not counted as a false alarm.
    """
    if not records:
        raise ParameterError("no epoch records to aggregate")

    by_phase = {p: [r for r in records if r.phase == p] for p in Phase}
    attacked = [r for r in records if r.attacked]
    benign = [r for r in records if not r.attacked]
    benign_scored = [r for r in benign if r.outcome.kind != OutcomeKind.DOS]

    techniques = sorted({t for r in records for t in r.verdicts}, key=list(Technique).index)
    decision_rates: Dict[Technique, Dict[str, Optional[float]]] = {}
    false_alarms: Dict[Technique, Optional[float]] = {}
    accepted_wrong: Dict[Technique, Optional[float]] = {}
    for t in techniques:
        b = [r for r in benign_scored if t in r.verdicts]
        a = [r for r in attacked if t in r.verdicts]
        b_valid = sum(r.verdicts[t].valid for r in b)
        a_invalid = sum(not r.verdicts[t].valid for r in a)
        decision_rates[t] = {BENIGN: _rate(b_valid, len(b)), ATTACK: _rate(a_invalid, len(a))}
        false_alarms[t] = _rate(len(b) - b_valid, len(b))
        accepted_wrong[t] = _rate(
            sum(r.outcome.kind == OutcomeKind.LARGE_ERROR and r.verdicts[t].valid for r in a),
            len(a),
        )

    errors = np.array(
        [r.outcome.error_m for r in benign if r.outcome.error_m is not None], dtype=float
    )
    percentiles = (
        {name: float(np.percentile(errors, q)) for name, q in ERROR_PERCENTILES.items()}
        if errors.size
        else {}
    )
    attacked_errors = [r.outcome.error_m for r in attacked if r.outcome.error_m is not None]
    attacker_distances = [
        r.attacker_distance_m for r in attacked if r.attacker_distance_m is not None
    ]

    report = MetricsReport(
        scenario=cfg.name,
        n_epochs=len(records),
        phase_counts={p: len(rs) for p, rs in by_phase.items()},
        phase_shares={p: _shares(rs) for p, rs in by_phase.items() if rs},
        attacked_shares=_shares(attacked) if attacked else None,
        decision_rates=decision_rates,
        false_alarm_rates=false_alarms,
        accepted_wrong_rates=accepted_wrong,
        accepted_wrong_rate_undefended=_rate(
            sum(r.outcome.kind == OutcomeKind.LARGE_ERROR for r in attacked), len(attacked)
        ),
        benign_error_percentiles_m=percentiles,
        attacked_median_error_m=float(np.median(attacked_errors)) if attacked_errors else None,
        median_attacker_distance_m=(
            float(np.median(attacker_distances)) if attacker_distances else None
        ),
        phase_homogeneity_p=phase_homogeneity(records),
        techniques=techniques,
    )
    logger.info(
        "aggregated %d epochs: benign success %.3f",
        len(records),
        _shares(benign)[OutcomeKind.SUCCESS] if benign else float("nan"),
    )
    return report

"""CSV and JSON export of a scenario run."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Any, Dict, List, Union

import pandas as pd

from core.errors import ExportError
from models.records import EpochRecord, MetricsReport
from models.scenario import ScenarioConfig
from models.verdict import Technique

logger = logging.getLogger(__name__)

EPOCHS_FILE = "epochs.csv"
METRICS_FILE = "metrics.json"
CONFIG_FILE = "config_resolved.json"

BASE_COLUMNS = [
    "epoch",
    "phase",
    "t_s",
    "truth_x_m",
    "truth_y_m",
    "est_x_m",
    "est_y_m",
    "outcome",
    "error_m",
    "serving_bs",
    "reference_bs",
    "n_detected",
    "attacker_distance_m",
]
DIAGNOSTIC_COLUMNS = ["min_peak_to_floor_db", "residual_norm_m"]


def epoch_columns() -> List[str]:
    verdict_columns = []
    for t in Technique:
        verdict_columns += [f"{t.value}_valid", f"{t.value}_reason"]
    return BASE_COLUMNS + verdict_columns + DIAGNOSTIC_COLUMNS


def _row(record: EpochRecord) -> Dict[str, Any]:
    est = record.estimate
    row: Dict[str, Any] = {
        "epoch": record.epoch,
        "phase": record.phase.value,
        "t_s": record.t_s,
        "truth_x_m": record.truth[0],
        "truth_y_m": record.truth[1],
        "est_x_m": est[0] if est else None,
        "est_y_m": est[1] if est else None,
        "outcome": record.outcome.kind.value,
        "error_m": record.outcome.error_m,
        "serving_bs": ";".join(str(b) for b in record.serving_bs),
        "reference_bs": record.reference_bs,
        "n_detected": record.n_detected,
        "attacker_distance_m": record.attacker_distance_m,
    }
    for t in Technique:
        verdict = record.verdicts.get(t)
        row[f"{t.value}_valid"] = None if verdict is None else int(verdict.valid)
        row[f"{t.value}_reason"] = None if verdict is None else verdict.reason
    for name in DIAGNOSTIC_COLUMNS:
        row[name] = record.diagnostics.get(name)
    return row


def records_frame(records: List[EpochRecord]) -> pd.DataFrame:
    """One row per epoch in the fixed export column order."""
    frame = pd.DataFrame([_row(r) for r in records], columns=epoch_columns())
    for col in ("reference_bs",) + tuple(f"{t.value}_valid" for t in Technique):
        frame[col] = frame[col].astype("Int64")
    return frame


def export(
    records: List[EpochRecord],
    report: MetricsReport,
    out_dir: Union[str, Path],
    cfg: ScenarioConfig,
) -> Dict[str, Path]:
    """Write epochs.csv, metrics.json and config_resolved.json into ``out_dir``."""
    out = Path(out_dir)
    paths = {
        "epochs": out / EPOCHS_FILE,
        "metrics": out / METRICS_FILE,
        "config": out / CONFIG_FILE,
    }
    try:
        out.mkdir(parents=True, exist_ok=True)
        records_frame(records).to_csv(
            paths["epochs"], index=False, float_format="%.6f", lineterminator="\n"
        )
        paths["metrics"].write_text(report.model_dump_json(indent=2) + "\n", encoding="utf-8")
        paths["config"].write_text(cfg.model_dump_json(indent=2) + "\n", encoding="utf-8")
    except OSError as exc:
        raise ExportError(f"cannot write results to {exc.filename or out}: {exc.strerror}") from exc
    logger.info("wrote %d epochs to %s", len(records), out)
    return paths

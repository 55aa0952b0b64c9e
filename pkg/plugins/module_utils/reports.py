# -*- coding: utf-8 -*-
"""
Report and prediction file formats.

Every JSON report carries ``format_version``; CSV column orders are fixed by the
``*_COLUMNS`` constants below and documented in docs/schemas.md.
"""

from __future__ import absolute_import, division, print_function

import json
import logging
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ansible.module_utils._text import to_text

from .checkpoint import check_format_version
from .data import AXES
from .exceptions import DimensionError, TrialParseError
from .metrics import DEFAULT_THRESHOLDS, SegMetricReport, mean_sd
from .model import CLASS_NAMES, FG, FOG

__metaclass__ = type

REPORT_FORMAT_VERSION = "1.0"
PROB_COLUMNS = tuple(f"prob_{name.lower()}" for name in CLASS_NAMES)
PREDICTION_COLUMNS = ("trial_id", "sample") + PROB_COLUMNS + ("pred", "label")
SEGMENT_COLUMNS = ("trial_id", "stage", "final", "sample") + PROB_COLUMNS + ("pred", "label")
SUBJECT_COLUMNS = (
    "subject",
    "f1_50",
    "mcc",
    "tp",
    "episodes",
    "fp_nonfog",
    "nonfog_trials",
    "nfog_model",
    "nfog_expert",
    "percent_tf_model",
    "percent_tf_expert",
)
OUTCOME_COLUMNS = (
    "trial_id",
    "subject_id",
    "percent_tf_model",
    "percent_tf_expert",
    "relative_tf_diff",
    "nfog_model",
    "nfog_expert",
    "f1_50",
    "mcc",
)

logger = logging.getLogger(__name__)


def _threshold_key(threshold: float) -> str:
    return f"f1_{int(round(threshold * 100))}"


def summary_columns(thresholds: Sequence[float] = DEFAULT_THRESHOLDS) -> Tuple[str, ...]:
    columns = ["variant"]
    for k in thresholds:
        columns += [f"{_threshold_key(k)}_mean", f"{_threshold_key(k)}_sd"]
    return tuple(columns + ["mcc_mean", "mcc_sd", "folds"])


def prediction_frame(
    trial_id: str,
    probabilities: np.ndarray,
    labels: np.ndarray,
    stage: Optional[int] = None,
    final: bool = True,
) -> pd.DataFrame:
    """
    Per-sample rows for one trial.

    Args:
        trial_id: Trial name
        probabilities: Class probabilities [l, T]
        labels: Reference labels [T]
        stage: When given, ``stage`` and ``final`` columns are emitted

    Returns:
        Frame in ``PREDICTION_COLUMNS`` (or ``SEGMENT_COLUMNS``) order
    """
    if probabilities.shape != (len(PROB_COLUMNS), labels.size):
        raise DimensionError(
            f"Probabilities {probabilities.shape} do not match {len(PROB_COLUMNS)} classes "
            f"x {labels.size} samples"
        )
    steps = labels.size
    data: Dict[str, Any] = {"trial_id": [trial_id] * steps, "sample": np.arange(steps)}
    for column, row in zip(PROB_COLUMNS, probabilities):
        data[column] = row
    data["pred"] = np.argmax(probabilities, axis=0)
    data["label"] = labels
    if stage is None:
        return pd.DataFrame(data, columns=list(PREDICTION_COLUMNS))
    data["stage"] = [stage] * steps
    data["final"] = [bool(final)] * steps
    return pd.DataFrame(data, columns=list(SEGMENT_COLUMNS))


def write_frame(frame: pd.DataFrame, path: str) -> str:
    frame.to_csv(path, index=False)
    logger.info(f"{len(frame)} rows written to {path}")
    return path


def read_csv_table(path: str, required: Sequence[str]) -> pd.DataFrame:
    """
    Read a CSV and check its required columns.

    Raises:
        TrialParseError: If the file is unreadable or lacks a column
    """
    try:
        frame = pd.read_csv(path, float_precision="round_trip")
    except (OSError, ValueError) as e:
        raise TrialParseError(f"Unable to read {path}: {to_text(e)}", path=path)
    missing = [column for column in required if column not in frame.columns]
    if missing:
        raise TrialParseError(f"{path}:1: missing columns {missing}", line=1, path=path)
    return frame


def _check_labels(values: pd.Series, path: str, column: str) -> np.ndarray:
    numeric = pd.to_numeric(values, errors="coerce").to_numpy(dtype=np.float64)
    invalid = ~np.isin(numeric, (FG, FOG))
    if invalid.any():
        line = int(np.flatnonzero(invalid)[0]) + 2
        raise TrialParseError(
            f"{path}:{line}: {column} must be 0 or 1", line=line, path=path
        )
    return numeric.astype(np.int64)


def read_label_streams(path: str, column: str) -> Dict[str, np.ndarray]:
    """
    Label streams per trial from a prediction, segment or trial CSV.

    Segment files contribute their ``final`` rows only. Trial CSVs (position
    columns present) drop their last label so they align with displacement-based
    predictions.

    Args:
        path: CSV path
        column: ``pred`` or ``label``

    Returns:
        Label stream per trial id, in sample order
    """
    frame = read_csv_table(path, [column])
    if "final" in frame.columns:
        frame = frame[frame["final"].astype(str).str.lower().isin(("true", "1"))]
    is_trial_file = any(str(c).endswith(f"_{AXES[0]}") for c in frame.columns)
    labels = _check_labels(frame[column], path, column)
    if "trial_id" not in frame.columns:
        streams = {"": labels}
    else:
        ids = frame["trial_id"].astype(str).to_numpy()
        order = list(dict.fromkeys(ids))
        streams = {trial: labels[ids == trial] for trial in order}
        if "sample" in frame.columns:
            samples = frame["sample"].to_numpy()
            for trial in order:
                streams[trial] = streams[trial][np.argsort(samples[ids == trial], kind="stable")]
    if is_trial_file:
        streams = {trial: stream[:-1] for trial, stream in streams.items()}
    return streams


def write_json(data: Mapping[str, Any], path: str) -> str:
    payload = {"format_version": REPORT_FORMAT_VERSION}
    payload.update(data)
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True, default=_json_default)
        handle.write("\n")
    logger.info(f"Report written to {path}")
    return path


def read_json(path: str) -> Dict[str, Any]:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            content = json.load(handle)
    except (OSError, ValueError) as e:
        raise TrialParseError(f"Unable to read report {path}: {to_text(e)}", path=path)
    check_format_version(content.get("format_version", "0"))
    return content


def _json_default(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"{type(value).__name__} is not JSON serializable")


def relative_tf_difference(model: float, expert: float) -> Optional[float]:
    """100 * |model - expert| / expert; None when the expert saw no freezing."""
    if expert == 0:
        return None
    return 100.0 * abs(model - expert) / expert


def outcome_row(trial_id: str, subject_id: str, report: SegMetricReport) -> Dict[str, Any]:
    return {
        "trial_id": trial_id,
        "subject_id": subject_id,
        "percent_tf_model": report.percent_tf_pred,
        "percent_tf_expert": report.percent_tf_truth,
        "relative_tf_diff": relative_tf_difference(report.percent_tf_pred, report.percent_tf_truth),
        "nfog_model": report.nfog_pred,
        "nfog_expert": report.nfog_truth,
        "f1_50": report.f1_at(0.5),
        "mcc": report.mcc,
    }


def outcomes_frame(rows: Sequence[Mapping[str, Any]]) -> pd.DataFrame:
    return pd.DataFrame(list(rows), columns=list(OUTCOME_COLUMNS))


def read_outcomes(path: str) -> pd.DataFrame:
    frame = read_csv_table(
        path, ["percent_tf_model", "percent_tf_expert", "nfog_model", "nfog_expert"]
    )
    for column in ("percent_tf_model", "percent_tf_expert", "nfog_model", "nfog_expert"):
        values = pd.to_numeric(frame[column], errors="coerce")
        if values.isna().any():
            line = int(np.flatnonzero(values.isna().to_numpy())[0]) + 2
            raise TrialParseError(
                f"{path}:{line}: {column} must be numeric", line=line, path=path
            )
        frame[column] = values
    return frame


def subject_row(
    subject: str, pooled: SegMetricReport, nonfog_reports: Sequence[SegMetricReport]
) -> Dict[str, Any]:
    """Per-subject line; false positives are counted on trials without expert FOG."""
    return {
        "subject": subject,
        "f1_50": pooled.f1_at(0.5),
        "mcc": pooled.mcc,
        "tp": pooled.episodes.tp,
        "episodes": pooled.episodes.episodes,
        "fp_nonfog": sum(r.episodes.fp for r in nonfog_reports),
        "nonfog_trials": len(nonfog_reports),
        "nfog_model": pooled.nfog_pred,
        "nfog_expert": pooled.nfog_truth,
        "percent_tf_model": pooled.percent_tf_pred,
        "percent_tf_expert": pooled.percent_tf_truth,
    }


def subjects_frame(rows: Sequence[Mapping[str, Any]]) -> pd.DataFrame:
    return pd.DataFrame(list(rows), columns=list(SUBJECT_COLUMNS))


def summary_row(
    variant: str,
    fold_reports: Sequence[SegMetricReport],
    thresholds: Sequence[float] = DEFAULT_THRESHOLDS,
) -> Dict[str, Any]:
    """Mean and population SD of per-fold F1@k and MCC."""
    row: Dict[str, Any] = {"variant": variant}
    for k in thresholds:
        mean, sd = mean_sd([r.f1_at(k) for r in fold_reports])
        row[f"{_threshold_key(k)}_mean"] = mean
        row[f"{_threshold_key(k)}_sd"] = sd
    row["mcc_mean"], row["mcc_sd"] = mean_sd([r.mcc for r in fold_reports])
    row["folds"] = len(fold_reports)
    return row


def summary_frame(
    rows: Sequence[Mapping[str, Any]], thresholds: Sequence[float] = DEFAULT_THRESHOLDS
) -> pd.DataFrame:
    return pd.DataFrame(list(rows), columns=list(summary_columns(thresholds)))


def format_mean_sd(mean: float, sd: float) -> str:
    return f"{mean:.1f} ± {sd:.1f}"


def summary_text(row: Mapping[str, Any], thresholds: Sequence[float] = DEFAULT_THRESHOLDS) -> List[str]:
    """Human-readable ``metric: mean ± sd`` lines of a summary row."""
    lines = [f"variant: {row['variant']} ({row['folds']} folds)"]
    for k in thresholds:
        key = _threshold_key(k)
        lines.append(f"F1@{int(round(k * 100))}: {format_mean_sd(row[f'{key}_mean'], row[f'{key}_sd'])}")
    lines.append(f"MCC: {format_mean_sd(row['mcc_mean'], row['mcc_sd'])}")
    return lines

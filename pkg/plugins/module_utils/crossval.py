# -*- coding: utf-8 -*-
"""
Leave-one-subject-out cross-validation.

Each fold trains a fresh network on every other subject (plus any enrichment
trials) and evaluates it on the held-out subject. Folds are independent and run
on a thread pool; each writes into its own directory and the summary is built
once all folds have finished.
"""

from __future__ import absolute_import, division, print_function

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .autodiff import DiffArray
from .config import TrainConfig
from .data import TrialFeatures
from .exceptions import MsgcnLeakageError, MsgcnValidationError
from .metrics import DEFAULT_THRESHOLDS, SegMetricReport, evaluate_labels, pool_reports
from .model import ModelParams, StageOutputs, forward
from .reports import (
    outcome_row,
    prediction_frame,
    subject_row,
    summary_row,
    write_frame,
    write_json,
)
from .skeleton import PartitionedAdjacency, SkeletonGraph
from .train import EpochRecord, adjacency_for, train, write_loss_trace

__metaclass__ = type

CHECKPOINT_FILENAME = "model.msgcn"
LOSS_FILENAME = "loss.csv"
PREDICTIONS_FILENAME = "predictions.csv"
FOLD_REPORT_FILENAME = "report.json"

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Fold:
    """One held-out subject with the trial ids it trains and evaluates on."""

    subject: str
    train_ids: Tuple[str, ...]
    eval_ids: Tuple[str, ...]
    enrichment_ids: Tuple[str, ...] = ()

    @property
    def all_train_ids(self) -> Tuple[str, ...]:
        return self.train_ids + self.enrichment_ids

    @property
    def name(self) -> str:
        return f"fold_{self.subject}"


@dataclass(frozen=True)
class FoldPlan:
    folds: Tuple[Fold, ...]
    subject_of: Dict[str, str]

    def __len__(self) -> int:
        return len(self.folds)


def check_no_leakage(fold: Fold, subject_of: Dict[str, str]) -> None:
    """
    Verify a fold never trains on its evaluation data.

    Raises:
        MsgcnLeakageError: If train and evaluation ids overlap or the held-out
            subject contributes a training trial
    """
    shared = sorted(set(fold.all_train_ids) & set(fold.eval_ids))
    if shared:
        raise MsgcnLeakageError(
            f"Fold {fold.subject} evaluates on training trials {shared[:5]}",
            subject=fold.subject,
            trials=shared,
        )
    leaked = sorted(t for t in fold.all_train_ids if subject_of.get(t) == fold.subject)
    if leaked:
        raise MsgcnLeakageError(
            f"Fold {fold.subject} trains on trials of its held-out subject: {leaked[:5]}",
            subject=fold.subject,
            trials=leaked,
        )


def plan_folds(
    trials: Sequence[Any],
    enrichment: Sequence[Any] = (),
    subjects: Optional[Sequence[str]] = None,
) -> FoldPlan:
    """
    Build one fold per evaluation subject.

    Args:
        trials: Evaluation trials (anything with ``trial_id`` and ``subject_id``)
        enrichment: Trials added to every fold's training set, never evaluated
        subjects: Expected subject ids; defaults to those present in ``trials``

    Returns:
        Folds in subject order

    Raises:
        MsgcnValidationError: For fewer than 2 subjects, a subject without trials
            or duplicate trial ids
        MsgcnLeakageError: If an enrichment trial belongs to an evaluation subject
    """
    subject_of: Dict[str, str] = {}
    for trial in list(trials) + list(enrichment):
        if trial.trial_id in subject_of:
            raise MsgcnValidationError(f"Trial id {trial.trial_id} appears more than once")
        subject_of[trial.trial_id] = trial.subject_id
    present = list(dict.fromkeys(t.subject_id for t in trials))
    subjects = list(subjects) if subjects is not None else present
    empty = [s for s in subjects if s not in present]
    if empty:
        raise MsgcnValidationError(f"Subjects without trials: {empty}", subjects=empty)
    if len(subjects) < 2:
        raise MsgcnValidationError(
            f"Leave-one-subject-out needs at least 2 subjects, got {len(subjects)}"
        )
    overlap = sorted({t.subject_id for t in enrichment} & set(subjects))
    if overlap:
        raise MsgcnLeakageError(
            f"Enrichment trials belong to evaluation subjects {overlap}", subjects=overlap
        )

    enrichment_ids = tuple(t.trial_id for t in enrichment)
    folds = []
    for subject in subjects:
        fold = Fold(
            subject=subject,
            train_ids=tuple(t.trial_id for t in trials if t.subject_id != subject),
            eval_ids=tuple(t.trial_id for t in trials if t.subject_id == subject),
            enrichment_ids=enrichment_ids,
        )
        check_no_leakage(fold, subject_of)
        folds.append(fold)
    return FoldPlan(tuple(folds), subject_of)


def predict_item(
    params: ModelParams, adj: Optional[PartitionedAdjacency], item: TrialFeatures
) -> StageOutputs:
    """Eval-mode forward pass of one trial."""
    features = DiffArray(item.features[np.newaxis], dtype=params.dtype)
    return forward(features, params, adj, training=False)


@dataclass
class FoldResult:
    fold: Fold
    report: SegMetricReport
    trial_reports: Dict[str, SegMetricReport]
    trace: List[EpochRecord] = field(default_factory=list)
    directory: Optional[str] = None

    @property
    def nonfog_reports(self) -> List[SegMetricReport]:
        return [r for r in self.trial_reports.values() if r.nfog_truth == 0]


@dataclass
class CrossValResult:
    variant: str
    folds: List[FoldResult]
    thresholds: Tuple[float, ...] = DEFAULT_THRESHOLDS

    def summary(self) -> Dict[str, Any]:
        return summary_row(self.variant, [f.report for f in self.folds], self.thresholds)

    def subject_rows(self) -> List[Dict[str, Any]]:
        return [subject_row(f.fold.subject, f.report, f.nonfog_reports) for f in self.folds]

    def outcome_rows(self, subject_of: Dict[str, str]) -> List[Dict[str, Any]]:
        return [
            outcome_row(trial_id, subject_of[trial_id], report)
            for f in self.folds
            for trial_id, report in f.trial_reports.items()
        ]

    def robustness(self) -> Dict[str, Any]:
        nonfog = [r for f in self.folds for r in f.nonfog_reports]
        return {
            "nonfog_trials": len(nonfog),
            "false_positive_episodes": sum(r.episodes.fp for r in nonfog),
            "trials_with_false_positives": sum(1 for r in nonfog if r.episodes.fp > 0),
        }


def run_fold(
    fold: Fold,
    by_id: Dict[str, TrialFeatures],
    cfg: TrainConfig,
    graph: Optional[SkeletonGraph] = None,
    directory: Optional[str] = None,
    thresholds: Sequence[float] = DEFAULT_THRESHOLDS,
) -> FoldResult:
    """Train on the fold's training trials and evaluate on its held-out subject."""
    logger.info(
        f"Fold {fold.subject}: training on {len(fold.all_train_ids)} trials, "
        f"evaluating {len(fold.eval_ids)}"
    )
    checkpoint = os.path.join(directory, CHECKPOINT_FILENAME) if directory else None
    result = train([by_id[t] for t in fold.all_train_ids], cfg, graph, checkpoint)
    _, adj = adjacency_for(cfg, graph)

    frames = []
    trial_reports: Dict[str, SegMetricReport] = {}
    for trial_id in fold.eval_ids:
        item = by_id[trial_id]
        outputs = predict_item(result.params, adj, item)
        probabilities = outputs.probabilities()[0]
        trial_reports[trial_id] = evaluate_labels(
            outputs.predictions()[0], item.labels, thresholds
        )
        frames.append(prediction_frame(trial_id, probabilities, item.labels))
    pooled = pool_reports(list(trial_reports.values()))
    if pooled.nfog_truth == 0:
        logger.warning(f"Held-out subject {fold.subject} has no expert-annotated FOG")

    if directory:
        write_loss_trace(result.trace, os.path.join(directory, LOSS_FILENAME))
        write_frame(pd.concat(frames, ignore_index=True), os.path.join(directory, PREDICTIONS_FILENAME))
        write_json(
            {
                "subject": fold.subject,
                "train_trials": list(fold.train_ids),
                "enrichment_trials": list(fold.enrichment_ids),
                "eval_trials": list(fold.eval_ids),
                "pooled": pooled.to_dict(),
                "trials": {t: r.to_dict() for t, r in trial_reports.items()},
            },
            os.path.join(directory, FOLD_REPORT_FILENAME),
        )
    logger.info(
        f"Fold {fold.subject}: MCC {pooled.mcc:.1f}, "
        + ", ".join(f"F1@{r.threshold:.2f} {r.f1:.1f}" for r in pooled.f1)
    )
    return FoldResult(fold, pooled, trial_reports, result.trace, directory)


def loso(
    trials: Sequence[TrialFeatures],
    cfg: TrainConfig,
    enrichment: Sequence[TrialFeatures] = (),
    graph: Optional[SkeletonGraph] = None,
    jobs: int = 1,
    output_dir: Optional[str] = None,
    subjects: Optional[Sequence[str]] = None,
    thresholds: Sequence[float] = DEFAULT_THRESHOLDS,
) -> Tuple[CrossValResult, FoldPlan]:
    """
    Run leave-one-subject-out cross-validation.

    Args:
        trials: Evaluation-subject trials
        cfg: Training recipe; every fold starts from the same seed
        enrichment: Training-only trials
        graph: Skeleton graph for graph variants
        jobs: Folds trained concurrently
        output_dir: Parent of the per-fold directories, if outputs are kept
        subjects: Expected subject ids
        thresholds: IoU thresholds for F1@k

    Returns:
        Per-fold results in subject order, and the fold plan

    Raises:
        MsgcnLeakageError: If any fold would train on its evaluation data
    """
    plan = plan_folds(trials, enrichment, subjects)
    by_id = {item.trial_id: item for item in list(trials) + list(enrichment)}

    def _run(fold: Fold) -> FoldResult:
        directory = None
        if output_dir:
            directory = os.path.join(output_dir, fold.name)
            os.makedirs(directory, exist_ok=True)
        return run_fold(fold, by_id, cfg, graph, directory, thresholds)

    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        results = list(pool.map(_run, plan.folds))
    logger.info(f"Cross-validation of {cfg.model.variant} finished: {len(results)} folds")
    return CrossValResult(cfg.model.variant, results, tuple(thresholds)), plan

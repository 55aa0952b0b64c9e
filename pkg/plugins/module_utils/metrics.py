# -*- coding: utf-8 -*-
"""
Segmentation metrics for freezing-of-gait label streams.

Segment-wise F1@k (IoU matching of FOG segments), sample-wise MCC, percentage
time frozen, FOG episode counts and overlap-based episode detection. All
functions are pure and operate on 1-D integer label streams (FG=0, FOG=1).
"""

from __future__ import absolute_import, division, print_function

import logging
import math
from dataclasses import asdict, dataclass
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np

from .exceptions import DimensionError, MsgcnValidationError
from .model import FOG

__metaclass__ = type

DEFAULT_THRESHOLDS = (0.10, 0.25, 0.50, 0.75)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Segment:
    """Maximal run of one label over samples [start, end)."""

    label: int
    start: int
    end: int

    def __post_init__(self) -> None:
        if self.start >= self.end:
            raise MsgcnValidationError(
                f"Segment start ({self.start}) must precede its end ({self.end})"
            )

    @property
    def length(self) -> int:
        return self.end - self.start


def _as_labels(labels: Sequence[int], name: str = "labels") -> np.ndarray:
    array = np.asarray(labels).astype(np.int64).reshape(-1)
    if array.size == 0:
        raise MsgcnValidationError(f"{name} must contain at least one sample")
    return array


def _check_lengths(pred: np.ndarray, truth: np.ndarray) -> None:
    if pred.shape != truth.shape:
        raise DimensionError(
            f"prediction has {pred.size} samples but ground truth has {truth.size}"
        )


def extract_segments(labels: Sequence[int]) -> List[Segment]:
    """Split a label stream into maximal constant runs in temporal order."""
    array = _as_labels(labels)
    change = np.flatnonzero(array[1:] != array[:-1]) + 1
    starts = np.concatenate(([0], change))
    ends = np.concatenate((change, [array.size]))
    return [Segment(int(array[s]), int(s), int(e)) for s, e in zip(starts, ends)]


def expand_segments(segments: Sequence[Segment]) -> np.ndarray:
    """Inverse of ``extract_segments``."""
    if not segments:
        return np.zeros(0, dtype=np.int64)
    out = np.empty(segments[-1].end, dtype=np.int64)
    for seg in segments:
        out[seg.start : seg.end] = seg.label
    return out


def iou(a: Segment, b: Segment) -> float:
    inter = max(0, min(a.end, b.end) - max(a.start, b.start))
    return inter / (a.length + b.length - inter)


@dataclass(frozen=True)
class F1Result:
    threshold: float
    tp: int
    fp: int
    fn: int
    f1: float


def f1_from_counts(threshold: float, tp: int, fp: int, fn: int) -> F1Result:
    denominator = 2 * tp + fp + fn
    f1 = 100.0 if denominator == 0 else 100.0 * 2 * tp / denominator
    return F1Result(threshold=threshold, tp=tp, fp=fp, fn=fn, f1=f1)


def f1_at_k(
    pred: Sequence[Segment],
    truth: Sequence[Segment],
    threshold: float,
    target: int = FOG,
) -> F1Result:
    """
    Segment-wise F1 of the target class at an IoU threshold.

    Predicted target segments are visited in temporal order; each is matched to
    the not-yet-matched ground-truth segment of maximal IoU (earliest on ties)
    and counts as TP when that IoU is at least ``threshold``, otherwise as FP.

    Args:
        pred: Segments tiling the predicted stream
        truth: Segments tiling the ground-truth stream
        threshold: IoU threshold k in (0, 1]
        target: Class whose segments are scored

    Returns:
        Counts and F1 in [0, 100]; 100 when neither side has a target segment

    Raises:
        DimensionError: If the streams cover different lengths
    """
    if not 0.0 < threshold <= 1.0:
        raise MsgcnValidationError(f"IoU threshold must be in (0, 1], got {threshold}")
    pred_len = pred[-1].end if pred else 0
    truth_len = truth[-1].end if truth else 0
    if pred_len != truth_len:
        raise DimensionError(
            f"prediction covers {pred_len} samples but ground truth covers {truth_len}"
        )
    pred_fog = [seg for seg in pred if seg.label == target]
    truth_fog = [seg for seg in truth if seg.label == target]
    matched = [False] * len(truth_fog)
    tp = fp = 0
    for seg in pred_fog:
        best, best_iou = -1, 0.0
        for j, ref in enumerate(truth_fog):
            if matched[j]:
                continue
            overlap = iou(seg, ref)
            if overlap > best_iou:
                best, best_iou = j, overlap
        if best >= 0 and best_iou >= threshold:
            matched[best] = True
            tp += 1
        else:
            fp += 1
    return f1_from_counts(threshold, tp, fp, len(truth_fog) - tp)


@dataclass(frozen=True)
class Confusion:
    """Sample-wise confusion counts with FOG as the positive class."""

    tp: int
    fp: int
    fn: int
    tn: int

    def __add__(self, other: "Confusion") -> "Confusion":
        return Confusion(
            self.tp + other.tp, self.fp + other.fp, self.fn + other.fn, self.tn + other.tn
        )

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    @property
    def accuracy(self) -> float:
        return 100.0 * (self.tp + self.tn) / self.total if self.total else 0.0

    @property
    def mcc(self) -> float:
        """MCC x 100; 0 when any marginal of the table is empty."""
        denominator = (
            (self.tp + self.fp) * (self.tp + self.fn) * (self.tn + self.fp) * (self.tn + self.fn)
        )
        if denominator == 0:
            return 0.0
        return 100.0 * (self.tp * self.tn - self.fp * self.fn) / math.sqrt(denominator)


def confusion(pred: Sequence[int], truth: Sequence[int], positive: int = FOG) -> Confusion:
    p = _as_labels(pred, "prediction") == positive
    t = _as_labels(truth, "ground truth") == positive
    _check_lengths(p, t)
    return Confusion(
        tp=int(np.sum(p & t)),
        fp=int(np.sum(p & ~t)),
        fn=int(np.sum(~p & t)),
        tn=int(np.sum(~p & ~t)),
    )


def mcc(pred: Sequence[int], truth: Sequence[int]) -> float:
    """Sample-wise Matthews correlation coefficient x 100, FOG positive."""
    return confusion(pred, truth).mcc


def percent_tf(labels: Sequence[int]) -> float:
    """Percentage of samples labelled FOG."""
    array = _as_labels(labels)
    return 100.0 * float(np.sum(array == FOG)) / array.size


def count_fog(segments: Sequence[Segment]) -> int:
    return sum(1 for seg in segments if seg.label == FOG)


@dataclass(frozen=True)
class EpisodeCounts:
    """
    Episode-level detection counts.

    Attributes:
        tp: Ground-truth episodes overlapped by at least one predicted FOG sample
        fp: Predicted FOG segments overlapping no ground-truth FOG sample
        episodes: Ground-truth FOG episodes
        predicted: Predicted FOG segments
    """

    tp: int
    fp: int
    episodes: int
    predicted: int

    def __add__(self, other: "EpisodeCounts") -> "EpisodeCounts":
        return EpisodeCounts(
            self.tp + other.tp,
            self.fp + other.fp,
            self.episodes + other.episodes,
            self.predicted + other.predicted,
        )


def episode_detection(pred: Sequence[int], truth: Sequence[int]) -> EpisodeCounts:
    p = _as_labels(pred, "prediction")
    t = _as_labels(truth, "ground truth")
    _check_lengths(p, t)
    pred_fog = p == FOG
    truth_fog = t == FOG
    truth_episodes = [seg for seg in extract_segments(t) if seg.label == FOG]
    pred_episodes = [seg for seg in extract_segments(p) if seg.label == FOG]
    tp = sum(1 for seg in truth_episodes if pred_fog[seg.start : seg.end].any())
    fp = sum(1 for seg in pred_episodes if not truth_fog[seg.start : seg.end].any())
    return EpisodeCounts(tp=tp, fp=fp, episodes=len(truth_episodes), predicted=len(pred_episodes))


@dataclass(frozen=True)
class SegMetricReport:
    """All metrics between one prediction and its ground truth (or a pooled set)."""

    f1: Tuple[F1Result, ...]
    confusion: Confusion
    episodes: EpisodeCounts
    percent_tf_pred: float
    percent_tf_truth: float
    nfog_pred: int
    nfog_truth: int
    samples: int
    trials: int = 1

    @property
    def mcc(self) -> float:
        return self.confusion.mcc

    @property
    def accuracy(self) -> float:
        return self.confusion.accuracy

    def f1_at(self, threshold: float) -> float:
        for result in self.f1:
            if math.isclose(result.threshold, threshold):
                return result.f1
        raise MsgcnValidationError(f"No F1 computed at threshold {threshold}")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "f1": {f"{r.threshold:.2f}": asdict(r) for r in self.f1},
            "mcc": self.mcc,
            "accuracy": self.accuracy,
            "confusion": asdict(self.confusion),
            "episodes": asdict(self.episodes),
            "percent_tf": {"model": self.percent_tf_pred, "expert": self.percent_tf_truth},
            "nfog": {"model": self.nfog_pred, "expert": self.nfog_truth},
            "samples": self.samples,
            "trials": self.trials,
        }


def evaluate_labels(
    pred: Sequence[int],
    truth: Sequence[int],
    thresholds: Sequence[float] = DEFAULT_THRESHOLDS,
) -> SegMetricReport:
    """
    Compute every metric between a predicted and a ground-truth label stream.

    Raises:
        DimensionError: If the streams differ in length
    """
    p = _as_labels(pred, "prediction")
    t = _as_labels(truth, "ground truth")
    _check_lengths(p, t)
    pred_segments = extract_segments(p)
    truth_segments = extract_segments(t)
    return SegMetricReport(
        f1=tuple(f1_at_k(pred_segments, truth_segments, k) for k in thresholds),
        confusion=confusion(p, t),
        episodes=episode_detection(p, t),
        percent_tf_pred=percent_tf(p),
        percent_tf_truth=percent_tf(t),
        nfog_pred=count_fog(pred_segments),
        nfog_truth=count_fog(truth_segments),
        samples=int(p.size),
    )


def pool_reports(reports: Sequence[SegMetricReport]) -> SegMetricReport:
    """
    Merge per-trial reports by pooling segments and samples.

    F1 is recomputed from summed TP/FP/FN, MCC from the summed confusion table
    and %TF from summed sample counts.
    """
    if not reports:
        raise MsgcnValidationError("Cannot pool an empty set of reports")
    thresholds = [r.threshold for r in reports[0].f1]
    f1 = []
    for i, k in enumerate(thresholds):
        tp = sum(r.f1[i].tp for r in reports)
        fp = sum(r.f1[i].fp for r in reports)
        fn = sum(r.f1[i].fn for r in reports)
        f1.append(f1_from_counts(k, tp, fp, fn))
    table = reports[0].confusion
    episodes = reports[0].episodes
    for r in reports[1:]:
        table = table + r.confusion
        episodes = episodes + r.episodes
    samples = sum(r.samples for r in reports)
    return SegMetricReport(
        f1=tuple(f1),
        confusion=table,
        episodes=episodes,
        percent_tf_pred=100.0 * (table.tp + table.fp) / samples,
        percent_tf_truth=100.0 * (table.tp + table.fn) / samples,
        nfog_pred=sum(r.nfog_pred for r in reports),
        nfog_truth=sum(r.nfog_truth for r in reports),
        samples=samples,
        trials=sum(r.trials for r in reports),
    )


def mean_sd(values: Sequence[float]) -> Tuple[float, float]:
    """Mean and population standard deviation."""
    if not values:
        raise MsgcnValidationError("Cannot aggregate an empty list of values")
    array = np.asarray(values, dtype=np.float64)
    return float(array.mean()), float(array.std(ddof=0))

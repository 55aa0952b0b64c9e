# -*- coding: utf-8 -*-
"""
Trial files, dataset manifests and displacement preprocessing.

A trial is stored as a CSV file with one row per sample::

    sample,<M>_x,<M>_y,<M>_z,...,label

positions in millimeters for every marker M, plus a sidecar JSON file with the
same stem holding ``{trial_id, subject_id, sample_rate}``. A dataset manifest
lists trial files grouped by subject; subjects flagged ``enrichment`` only ever
contribute training data.
"""

from __future__ import absolute_import, division, print_function

import json
import logging
import os
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ansible.module_utils._text import to_text

from .exceptions import (
    DimensionError,
    MsgcnOperationError,
    MsgcnValidationError,
    TrialParseError,
)
from .model import FG, FOG
from .skeleton import SkeletonGraph

__metaclass__ = type

AXES = ("x", "y", "z")
DEFAULT_SAMPLE_RATE = 100.0
MANIFEST_FILENAME = "manifest.json"
MANIFEST_VERSION = "1.0"
SIDECAR_SUFFIX = ".json"

logger = logging.getLogger(__name__)


@dataclass
class Trial:
    """
    One motion-capture recording with per-sample annotations.

    Attributes:
        trial_id: Unique trial name
        subject_id: Subject the trial belongs to
        markers: Marker names in column order
        positions: Marker positions [N, T, 3] in millimeters
        labels: Class stream [T] (FG=0, FOG=1)
        sample_rate: Sampling frequency in Hz
    """

    trial_id: str
    subject_id: str
    markers: Tuple[str, ...]
    positions: np.ndarray
    labels: np.ndarray
    sample_rate: float = DEFAULT_SAMPLE_RATE

    def __post_init__(self) -> None:
        self.markers = tuple(self.markers)
        self.positions = np.asarray(self.positions, dtype=np.float64)
        self.labels = np.asarray(self.labels).astype(np.int64)
        if len(set(self.markers)) != len(self.markers):
            raise MsgcnValidationError(f"Trial {self.trial_id} has duplicate marker names")
        if self.positions.ndim != 3 or self.positions.shape[2] != len(AXES):
            raise DimensionError(
                f"Trial {self.trial_id} positions must be [N, T, 3], got {self.positions.shape}"
            )
        if self.positions.shape[0] != len(self.markers):
            raise DimensionError(
                f"Trial {self.trial_id} has {len(self.markers)} marker names but "
                f"{self.positions.shape[0]} position tracks"
            )
        if self.labels.shape != (self.positions.shape[1],):
            raise DimensionError(
                f"Trial {self.trial_id} has {self.positions.shape[1]} samples but "
                f"{self.labels.size} labels"
            )
        if not np.all(np.isfinite(self.positions)):
            raise MsgcnValidationError(f"Trial {self.trial_id} contains non-finite positions")
        if np.any((self.labels != FG) & (self.labels != FOG)):
            raise MsgcnValidationError(f"Trial {self.trial_id} labels must be 0 (FG) or 1 (FOG)")
        if self.sample_rate <= 0:
            raise MsgcnValidationError(f"Trial {self.trial_id} sample_rate must be > 0")

    @property
    def num_samples(self) -> int:
        return int(self.positions.shape[1])

    @property
    def num_markers(self) -> int:
        return len(self.markers)

    @property
    def has_fog(self) -> bool:
        return bool(np.any(self.labels == FOG))

    def reordered(self, graph: SkeletonGraph) -> "Trial":
        """
        Return the trial with marker tracks in graph node order.

        Raises:
            DimensionError: If the marker count differs from the graph's
            MsgcnValidationError: If a marker is absent from the graph
        """
        if self.num_markers != graph.num_nodes:
            raise DimensionError(
                f"Trial {self.trial_id} has {self.num_markers} markers but the skeleton "
                f"graph has {graph.num_nodes} nodes",
                markers=self.num_markers,
                nodes=graph.num_nodes,
            )
        unknown = sorted(set(self.markers) - set(graph.nodes))
        if unknown:
            raise MsgcnValidationError(
                f"Trial {self.trial_id} has markers unknown to the skeleton graph: {unknown}",
                markers=unknown,
            )
        if self.markers == tuple(graph.nodes):
            return self
        order = [self.markers.index(name) for name in graph.nodes]
        return Trial(
            trial_id=self.trial_id,
            subject_id=self.subject_id,
            markers=tuple(graph.nodes),
            positions=self.positions[order],
            labels=self.labels,
            sample_rate=self.sample_rate,
        )


@dataclass(frozen=True)
class TrialFeatures:
    """Network-ready trial: displacement features [C_in, N, T] and labels [T]."""

    trial_id: str
    subject_id: str
    features: np.ndarray
    labels: np.ndarray

    @property
    def num_samples(self) -> int:
        return int(self.features.shape[-1])


def displacement_features(trial: Trial) -> Tuple[np.ndarray, np.ndarray]:
    """
    First difference of marker positions along time.

    ``features[n, t] = positions[n, t + 1] - positions[n, t]``; the label of the
    final sample is dropped so labels stay aligned with the earlier sample.

    Returns:
        Features [N, T - 1, 3] and labels [T - 1]

    Raises:
        DimensionError: If the trial has fewer than two samples
    """
    if trial.num_samples < 2:
        raise DimensionError(
            f"Trial {trial.trial_id} needs at least 2 samples for displacement, "
            f"got {trial.num_samples}"
        )
    return np.diff(trial.positions, axis=1), trial.labels[:-1].copy()


def prepare_trial(trial: Trial, graph: Optional[SkeletonGraph] = None) -> TrialFeatures:
    """Displacement features in channel-first layout, markers in graph order."""
    if graph is not None:
        trial = trial.reordered(graph)
    features, labels = displacement_features(trial)
    return TrialFeatures(
        trial_id=trial.trial_id,
        subject_id=trial.subject_id,
        features=np.ascontiguousarray(features.transpose(2, 0, 1)),
        labels=labels,
    )


def trial_columns(markers: Sequence[str]) -> List[str]:
    columns = ["sample"]
    for name in markers:
        columns.extend(f"{name}_{axis}" for axis in AXES)
    columns.append("label")
    return columns


def sidecar_path(path: str) -> str:
    return os.path.splitext(path)[0] + SIDECAR_SUFFIX


def save_trial(trial: Trial, path: str) -> str:
    """
    Write a trial CSV plus its sidecar JSON.

    Floats are written in their shortest round-trip representation, so loading
    reproduces positions bit for bit.

    Returns:
        The CSV path
    """
    flat = trial.positions.transpose(1, 0, 2).reshape(trial.num_samples, -1)
    frame = pd.DataFrame(flat, columns=trial_columns(trial.markers)[1:-1])
    frame.insert(0, "sample", np.arange(trial.num_samples))
    frame["label"] = trial.labels
    try:
        frame.to_csv(path, index=False)
        with open(sidecar_path(path), "w", encoding="utf-8") as handle:
            json.dump(
                {
                    "trial_id": trial.trial_id,
                    "subject_id": trial.subject_id,
                    "sample_rate": trial.sample_rate,
                },
                handle,
                indent=2,
                sort_keys=True,
            )
            handle.write("\n")
    except OSError as e:
        raise MsgcnOperationError(f"Unable to write trial {trial.trial_id} to {path}", e)
    logger.debug(f"Trial {trial.trial_id} ({trial.num_samples} samples) written to {path}")
    return path


def _parse_header(columns: Sequence[str], path: str) -> Tuple[str, ...]:
    columns = [str(c).strip() for c in columns]
    if not columns or columns[0] != "sample":
        raise TrialParseError(f"{path}:1: first column must be 'sample'", line=1, path=path)
    if columns[-1] != "label":
        raise TrialParseError(f"{path}:1: last column must be 'label'", line=1, path=path)
    body = columns[1:-1]
    if not body or len(body) % len(AXES):
        raise TrialParseError(
            f"{path}:1: expected three position columns per marker, got {len(body)}",
            line=1,
            path=path,
        )
    markers = []
    for i in range(0, len(body), len(AXES)):
        triple = body[i : i + len(AXES)]
        name = triple[0].rsplit("_", 1)[0]
        if triple != [f"{name}_{axis}" for axis in AXES]:
            raise TrialParseError(
                f"{path}:1: columns {triple} are not '<marker>_x,<marker>_y,<marker>_z'",
                line=1,
                path=path,
            )
        markers.append(name)
    return tuple(markers)


def _first_bad_row(invalid: np.ndarray) -> int:
    # header is line 1
    return int(np.flatnonzero(invalid)[0]) + 2


def _read_sidecar(path: str) -> Dict[str, Any]:
    meta_path = sidecar_path(path)
    try:
        with open(meta_path, "r", encoding="utf-8") as handle:
            meta = json.load(handle)
    except OSError as e:
        raise TrialParseError(f"Unable to read trial sidecar {meta_path}: {to_text(e)}", path=meta_path)
    except ValueError as e:
        raise TrialParseError(f"Trial sidecar {meta_path} is not valid JSON: {to_text(e)}", path=meta_path)
    missing = [key for key in ("trial_id", "subject_id") if key not in meta]
    if missing:
        raise TrialParseError(f"Trial sidecar {meta_path} lacks {missing}", path=meta_path)
    return meta


def load_trial(path: str, graph: Optional[SkeletonGraph] = None) -> Trial:
    """
    Read a trial CSV and its sidecar.

    Args:
        path: Trial CSV path
        graph: When given, markers are validated against and reordered to its nodes

    Returns:
        The parsed trial

    Raises:
        TrialParseError: For schema violations; ``kwargs["line"]`` names the line
        DimensionError: If the marker count differs from the graph's node count
    """
    meta = _read_sidecar(path)
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except OSError as e:
        raise TrialParseError(f"Unable to read trial {path}: {to_text(e)}", path=path)
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        match = re.search(r"line (\d+)", to_text(e))
        line = int(match.group(1)) if match else None
        raise TrialParseError(f"{path}: malformed CSV: {to_text(e)}", line=line, path=path)

    markers = _parse_header(frame.columns, path)
    if frame.empty:
        raise TrialParseError(f"{path}: trial has no samples", line=2, path=path)

    numeric = frame.apply(pd.to_numeric, errors="coerce")
    values = numeric.to_numpy(dtype=np.float64)
    invalid = ~np.isfinite(values).all(axis=1)
    if invalid.any():
        line = _first_bad_row(invalid)
        raise TrialParseError(
            f"{path}:{line}: non-numeric, missing or non-finite value", line=line, path=path
        )
    sample = values[:, 0]
    wrong_index = sample != np.arange(len(sample))
    if wrong_index.any():
        line = _first_bad_row(wrong_index)
        raise TrialParseError(
            f"{path}:{line}: sample index must count up from 0", line=line, path=path
        )
    labels = values[:, -1]
    wrong_label = (labels != FG) & (labels != FOG)
    if wrong_label.any():
        line = _first_bad_row(wrong_label)
        raise TrialParseError(f"{path}:{line}: label must be 0 or 1", line=line, path=path)

    # re-parse positions with round-trip precision
    positions = (
        frame.iloc[:, 1:-1]
        .apply(lambda column: column.map(float))
        .to_numpy(dtype=np.float64)
    )
    trial = Trial(
        trial_id=str(meta["trial_id"]),
        subject_id=str(meta["subject_id"]),
        markers=markers,
        positions=positions.reshape(len(frame), len(markers), len(AXES)).transpose(1, 0, 2),
        labels=labels.astype(np.int64),
        sample_rate=float(meta.get("sample_rate", DEFAULT_SAMPLE_RATE)),
    )
    if graph is not None:
        trial = trial.reordered(graph)
    logger.debug(f"Loaded trial {trial.trial_id} from {path}")
    return trial


@dataclass(frozen=True)
class ManifestEntry:
    trial_id: str
    subject_id: str
    path: str
    enrichment: bool = False
    has_fog: bool = False


@dataclass
class Manifest:
    """Trial files of a dataset, grouped by subject."""

    root: str
    entries: List[ManifestEntry] = field(default_factory=list)

    @property
    def subjects(self) -> List[str]:
        """Evaluation subjects in first-appearance order."""
        seen: List[str] = []
        for entry in self.entries:
            if not entry.enrichment and entry.subject_id not in seen:
                seen.append(entry.subject_id)
        return seen

    @property
    def enrichment_subjects(self) -> List[str]:
        seen: List[str] = []
        for entry in self.entries:
            if entry.enrichment and entry.subject_id not in seen:
                seen.append(entry.subject_id)
        return seen

    @property
    def fog_trials(self) -> int:
        return sum(1 for entry in self.entries if entry.has_fog)

    def resolve(self, entry: ManifestEntry) -> str:
        return entry.path if os.path.isabs(entry.path) else os.path.join(self.root, entry.path)

    def to_dict(self) -> Dict[str, Any]:
        groups: Dict[Tuple[str, bool], List[Dict[str, Any]]] = {}
        for entry in self.entries:
            groups.setdefault((entry.subject_id, entry.enrichment), []).append(
                {"trial_id": entry.trial_id, "file": entry.path, "has_fog": entry.has_fog}
            )
        return {
            "format_version": MANIFEST_VERSION,
            "subjects": [
                {"subject_id": subject, "enrichment": enrichment, "trials": trials}
                for (subject, enrichment), trials in groups.items()
            ],
            "trials": len(self.entries),
            "fog_trials": self.fog_trials,
        }


def save_manifest(manifest: Manifest, directory: str) -> str:
    path = os.path.join(directory, MANIFEST_FILENAME)
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(manifest.to_dict(), handle, indent=2)
        handle.write("\n")
    logger.info(f"Manifest with {len(manifest.entries)} trials written to {path}")
    return path


def load_manifest(path: str) -> Manifest:
    """
    Read a dataset manifest; trial paths resolve relative to its directory.

    Raises:
        TrialParseError: If the manifest is unreadable or malformed
    """
    if os.path.isdir(path):
        path = os.path.join(path, MANIFEST_FILENAME)
    try:
        with open(path, "r", encoding="utf-8") as handle:
            content = json.load(handle)
    except (OSError, ValueError) as e:
        raise TrialParseError(f"Unable to read manifest {path}: {to_text(e)}", path=path)
    entries = []
    try:
        for group in content["subjects"]:
            subject = str(group["subject_id"])
            if not group["trials"]:
                raise TrialParseError(
                    f"Manifest {path} lists subject {subject} without trials",
                    path=path,
                    subject=subject,
                )
            for trial in group["trials"]:
                entries.append(
                    ManifestEntry(
                        trial_id=str(trial["trial_id"]),
                        subject_id=subject,
                        path=str(trial["file"]),
                        enrichment=bool(group.get("enrichment", False)),
                        has_fog=bool(trial.get("has_fog", False)),
                    )
                )
    except (KeyError, TypeError) as e:
        raise TrialParseError(f"Manifest {path} is malformed: missing {to_text(e)}", path=path)
    ids = [entry.trial_id for entry in entries]
    if len(set(ids)) != len(ids):
        raise MsgcnValidationError(f"Manifest {path} lists duplicate trial ids")
    return Manifest(root=os.path.dirname(os.path.abspath(path)), entries=entries)


def load_dataset(
    manifest: Manifest, graph: Optional[SkeletonGraph] = None, jobs: int = 1
) -> Tuple[List[Trial], List[Trial]]:
    """
    Load every trial of a manifest.

    Returns:
        Evaluation-subject trials and enrichment trials, each in manifest order
    """

    def _load(entry: ManifestEntry) -> Trial:
        trial = load_trial(manifest.resolve(entry), graph)
        if trial.subject_id != entry.subject_id:
            raise MsgcnValidationError(
                f"Trial {trial.trial_id} belongs to subject {trial.subject_id} but the "
                f"manifest lists it under {entry.subject_id}"
            )
        return trial

    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        trials = list(pool.map(_load, manifest.entries))
    evaluation = [t for t, e in zip(trials, manifest.entries) if not e.enrichment]
    enrichment = [t for t, e in zip(trials, manifest.entries) if e.enrichment]
    logger.info(
        f"Loaded {len(evaluation)} evaluation and {len(enrichment)} enrichment trials "
        f"from {manifest.root}"
    )
    return evaluation, enrichment


def write_dataset(
    trials: Sequence[Trial], directory: str, enrichment_subjects: Sequence[str] = ()
) -> Manifest:
    """
    Save trials as ``<trial_id>.csv`` files plus a manifest.

    Returns:
        The written manifest
    """
    entries = []
    for trial in trials:
        filename = f"{trial.trial_id}.csv"
        save_trial(trial, os.path.join(directory, filename))
        entries.append(
            ManifestEntry(
                trial_id=trial.trial_id,
                subject_id=trial.subject_id,
                path=filename,
                enrichment=trial.subject_id in enrichment_subjects,
                has_fog=trial.has_fog,
            )
        )
    manifest = Manifest(root=os.path.abspath(directory), entries=entries)
    save_manifest(manifest, directory)
    return manifest

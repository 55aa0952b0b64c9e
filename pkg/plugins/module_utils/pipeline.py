# -*- coding: utf-8 -*-
"""
Pipeline commands shared by the ``msgcn`` command line and the Ansible modules.

Every command takes an effective ``RunConfig`` plus paths and returns a
JSON-serializable result dictionary. Commands that create an output directory
refuse a non-empty one unless ``force`` is set, and always leave a
``config.json`` snapshot in it.
"""

from __future__ import absolute_import, division, print_function

import logging
import os
from typing import Any, Dict, Optional, Sequence

import numpy as np
import pandas as pd

from .autodiff import DiffArray
from .checkpoint import load_checkpoint, read_header
from .config import RunConfig, dump_config
from .crossval import CHECKPOINT_FILENAME, LOSS_FILENAME, loso
from .data import load_dataset, load_manifest, load_trial, prepare_trial, write_dataset
from .exceptions import MsgcnValidationError
from .metrics import DEFAULT_THRESHOLDS, evaluate_labels, pool_reports
from .model import count_params, forward
from .reports import (
    outcomes_frame,
    prediction_frame,
    read_label_streams,
    read_outcomes,
    subjects_frame,
    summary_frame,
    summary_text,
    write_frame,
    write_json,
)
from .skeleton import build_default_graph, load_graph, partition
from .stats import agreement_report
from .synth import generate_synthetic
from .train import train, write_loss_trace

__metaclass__ = type

SUMMARY_JSON = "summary.json"
SUMMARY_CSV = "summary.csv"
SUBJECTS_CSV = "subjects.csv"
OUTCOMES_CSV = "trial_outcomes.csv"

logger = logging.getLogger(__name__)


def prepare_output_dir(directory: str, force: bool = False) -> str:
    """
    Create an output directory, refusing to reuse a non-empty one without ``force``.

    Raises:
        MsgcnValidationError: If the directory holds files and ``force`` is False
    """
    if os.path.isdir(directory) and os.listdir(directory) and not force:
        raise MsgcnValidationError(
            f"Output directory {directory} is not empty; pass force to overwrite it",
            path=directory,
        )
    os.makedirs(directory, exist_ok=True)
    return directory


def resolve_graph(path: Optional[str] = None):
    return load_graph(path) if path else build_default_graph()


def cmd_synth(
    config: RunConfig,
    output_dir: str,
    force: bool = False,
    enrichment_subjects: Sequence[str] = (),
) -> Dict[str, Any]:
    """Generate a synthetic dataset with its manifest."""
    prepare_output_dir(output_dir, force)
    trials = generate_synthetic(config.synth)
    manifest = write_dataset(trials, output_dir, enrichment_subjects)
    dump_config(config, output_dir)
    return {
        "changed": True,
        "output_dir": output_dir,
        "manifest": os.path.join(output_dir, "manifest.json"),
        "trials": len(manifest.entries),
        "fog_trials": manifest.fog_trials,
        "subjects": manifest.subjects,
        "enrichment_subjects": manifest.enrichment_subjects,
    }


def _load_items(config: RunConfig, manifest_path: str, graph):
    manifest = load_manifest(manifest_path)
    evaluation, enrichment = load_dataset(manifest, graph, config.jobs)
    return (
        manifest,
        [prepare_trial(t, graph) for t in evaluation],
        [prepare_trial(t, graph) for t in enrichment],
    )


def cmd_train(
    config: RunConfig,
    manifest_path: str,
    output_dir: str,
    force: bool = False,
    graph_path: Optional[str] = None,
) -> Dict[str, Any]:
    """Train one network on every trial of a manifest."""
    prepare_output_dir(output_dir, force)
    graph = resolve_graph(graph_path)
    _, evaluation, enrichment = _load_items(config, manifest_path, graph)
    dump_config(config, output_dir)
    result = train(
        evaluation + enrichment,
        config.train,
        graph,
        os.path.join(output_dir, CHECKPOINT_FILENAME),
    )
    write_loss_trace(result.trace, os.path.join(output_dir, LOSS_FILENAME))
    return {
        "changed": True,
        "output_dir": output_dir,
        "checkpoint": result.checkpoint,
        "parameters": result.params.count(),
        "epochs": len(result.trace),
        "initial_loss": result.initial_loss,
        "final_loss": result.final_loss,
    }


def cmd_crossval(
    config: RunConfig,
    manifest_path: str,
    output_dir: str,
    force: bool = False,
    graph_path: Optional[str] = None,
) -> Dict[str, Any]:
    """Leave-one-subject-out evaluation of one variant with summary tables."""
    prepare_output_dir(output_dir, force)
    graph = resolve_graph(graph_path)
    manifest, evaluation, enrichment = _load_items(config, manifest_path, graph)
    dump_config(config, output_dir)
    result, plan = loso(
        evaluation,
        config.train,
        enrichment,
        graph,
        jobs=config.jobs,
        output_dir=output_dir,
        subjects=manifest.subjects,
    )
    summary = result.summary()
    subjects = result.subject_rows()
    write_frame(summary_frame([summary]), os.path.join(output_dir, SUMMARY_CSV))
    write_frame(subjects_frame(subjects), os.path.join(output_dir, SUBJECTS_CSV))
    write_frame(
        outcomes_frame(result.outcome_rows(plan.subject_of)),
        os.path.join(output_dir, OUTCOMES_CSV),
    )
    write_json(
        {"summary": summary, "subjects": subjects, "robustness": result.robustness()},
        os.path.join(output_dir, SUMMARY_JSON),
    )
    for line in summary_text(summary):
        logger.info(line)
    return {
        "changed": True,
        "output_dir": output_dir,
        "folds": len(result.folds),
        "summary": summary,
        "subjects": subjects,
        "robustness": result.robustness(),
    }


def cmd_segment(
    checkpoint_path: str,
    trial_path: str,
    output_path: str,
    graph_path: Optional[str] = None,
) -> Dict[str, Any]:
    """Per-sample probabilities and labels of every stage for one trial."""
    expected = load_graph(graph_path) if graph_path else None
    checkpoint = load_checkpoint(checkpoint_path, expected)
    graph = expected or checkpoint.graph or build_default_graph()
    params = checkpoint.params
    item = prepare_trial(load_trial(trial_path, graph), graph)
    adj = partition(graph) if params.config.uses_graph else None
    outputs = forward(
        DiffArray(item.features[np.newaxis], dtype=params.dtype), params, adj, training=False
    )
    last = len(outputs) - 1
    frames = [
        prediction_frame(
            item.trial_id, outputs.probabilities(s)[0], item.labels, stage=s, final=s == last
        )
        for s in range(len(outputs))
    ]
    write_frame(pd.concat(frames, ignore_index=True), output_path)
    report = evaluate_labels(outputs.predictions()[0], item.labels)
    return {
        "changed": True,
        "output": output_path,
        "trial_id": item.trial_id,
        "samples": item.num_samples,
        "stages": len(outputs),
        "percent_tf": report.percent_tf_pred,
        "nfog": report.nfog_pred,
    }


def _pair_streams(pred: Dict[str, np.ndarray], truth: Dict[str, np.ndarray]):
    if len(pred) == 1 and len(truth) == 1:
        (pid, p), (_, t) = next(iter(pred.items())), next(iter(truth.items()))
        return [(pid, p, t)]
    missing = sorted(set(pred) ^ set(truth))
    if missing:
        raise MsgcnValidationError(
            f"Prediction and ground truth cover different trials: {missing[:5]}", trials=missing
        )
    return [(trial, pred[trial], truth[trial]) for trial in pred]


def cmd_evaluate(
    prediction_path: str,
    truth_path: str,
    output_path: Optional[str] = None,
    thresholds: Sequence[float] = DEFAULT_THRESHOLDS,
) -> Dict[str, Any]:
    """
    Every metric between predicted and reference label streams.

    Raises:
        DimensionError: If a trial's streams differ in length
    """
    pairs = _pair_streams(
        read_label_streams(prediction_path, "pred"), read_label_streams(truth_path, "label")
    )
    trials = {trial: evaluate_labels(p, t, thresholds) for trial, p, t in pairs}
    pooled = pool_reports(list(trials.values()))
    nonfog = [r for r in trials.values() if r.nfog_truth == 0]
    report = {
        "pooled": pooled.to_dict(),
        "trials": {trial: r.to_dict() for trial, r in trials.items()},
        "robustness": {
            "nonfog_trials": len(nonfog),
            "false_positive_episodes": sum(r.episodes.fp for r in nonfog),
        },
    }
    if output_path:
        write_json(report, output_path)
    report["changed"] = bool(output_path)
    return report


def cmd_stats(outcomes_path: str, output_path: Optional[str] = None) -> Dict[str, Any]:
    """
    Agreement of model and expert %TF and #FOG over trials with expert FOG.

    Raises:
        UndefinedCorrelationError: If an outcome has no variance
    """
    frame = read_outcomes(outcomes_path)
    fog = frame[frame["nfog_expert"] > 0]
    report = {
        "trials": int(len(fog)),
        "excluded_trials": int(len(frame) - len(fog)),
        "percent_tf": agreement_report(fog["percent_tf_expert"], fog["percent_tf_model"]),
        "nfog": agreement_report(fog["nfog_expert"], fog["nfog_model"]),
    }
    if output_path:
        write_json(report, output_path)
    report["changed"] = bool(output_path)
    return report


def cmd_inspect(
    config: RunConfig,
    checkpoint_path: Optional[str] = None,
    graph_path: Optional[str] = None,
    show_graph: bool = False,
) -> Dict[str, Any]:
    """Describe a checkpoint, a skeleton graph or the configured network."""
    if checkpoint_path:
        header = read_header(checkpoint_path)
        return {
            "changed": False,
            "checkpoint": checkpoint_path,
            "format_version": header["format_version"],
            "config": header["config"],
            "graph_hash": header.get("graph_hash"),
            "parameters": header["param_count"],
            "metadata": header.get("metadata") or {},
        }
    if show_graph or graph_path:
        graph = resolve_graph(graph_path)
        return {"changed": False, "graph": graph.to_dict(), "graph_hash": graph.graph_hash()}
    graph = resolve_graph(None)
    model = config.model
    return {
        "changed": False,
        "config": model.to_dict(),
        "parameters": count_params(model, graph.num_nodes),
        "stages": model.stage_count,
        "receptive_field": model.receptive_field,
    }


# -*- coding: utf-8 -*-
"""
Mini-batch training loop.

Trials of different lengths are zero-padded to the longest trial of their batch
and carry a validity mask that batch normalization and the loss honor. All
randomness derives from the run seed: parameter initialization draws from
``SeedSequence([seed, 0])`` and the batch order of epoch ``e`` from
``SeedSequence([seed, 1, e])``.
"""

from __future__ import absolute_import, division, print_function

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ansible.module_utils._text import to_text

from .autodiff import DiffArray, Tape, add_n, resolve_dtype
from .checkpoint import save_checkpoint
from .config import TrainConfig
from .data import TrialFeatures
from .exceptions import (
    DimensionError,
    MsgcnValidationError,
    NonFiniteGradientError,
    TrainingDivergedError,
    TrialParseError,
)
from .loss import stage_loss_terms
from .model import ModelParams, forward
from .optim import AdamState, adam_step
from .skeleton import PartitionedAdjacency, SkeletonGraph, build_default_graph, partition

__metaclass__ = type

INIT_STREAM = 0
SHUFFLE_STREAM = 1
STAGE_LOSS_SEPARATOR = ";"
LOSS_TRACE_COLUMNS = ("epoch", "stage_losses", "total")

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Batch:
    """Padded mini-batch: features [B, C, N, T], labels and mask [B, T]."""

    trial_ids: Tuple[str, ...]
    features: np.ndarray
    labels: np.ndarray
    mask: np.ndarray

    @property
    def size(self) -> int:
        return len(self.trial_ids)

    @property
    def lengths(self) -> np.ndarray:
        return self.mask.sum(axis=1).astype(np.int64)


def epoch_order(count: int, seed: int, epoch: int) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence([seed, SHUFFLE_STREAM, epoch]))
    return rng.permutation(count)


def collate(items: Sequence[TrialFeatures], dtype: type = np.float64) -> Batch:
    """Stack trials into one batch, padding time to the longest trial."""
    shapes = {item.features.shape[:2] for item in items}
    if len(shapes) != 1:
        raise DimensionError(f"Trials in one batch disagree on [C_in, N]: {sorted(shapes)}")
    channels, nodes = shapes.pop()
    steps = max(item.num_samples for item in items)
    features = np.zeros((len(items), channels, nodes, steps), dtype=dtype)
    labels = np.zeros((len(items), steps), dtype=np.int64)
    mask = np.zeros((len(items), steps), dtype=dtype)
    for b, item in enumerate(items):
        length = item.num_samples
        features[b, ..., :length] = item.features
        labels[b, :length] = item.labels
        mask[b, :length] = 1.0
    return Batch(tuple(item.trial_id for item in items), features, labels, mask)


def make_batches(
    items: Sequence[TrialFeatures],
    batch_size: int,
    seed: int = 0,
    epoch: int = 0,
    shuffle: bool = True,
    dtype: type = np.float64,
) -> List[Batch]:
    """
    Split trials into padded mini-batches.

    Args:
        items: Prepared trials
        batch_size: Maximum trials per batch
        seed: Run seed
        epoch: Epoch index; with ``seed`` it fixes the shuffled order
        shuffle: Keep input order when False
        dtype: Floating precision of features and masks

    Returns:
        Batches covering every trial exactly once

    Raises:
        MsgcnValidationError: If no trial is given or batch_size < 1
    """
    if not items:
        raise MsgcnValidationError("Cannot build batches from an empty trial set")
    if batch_size < 1:
        raise MsgcnValidationError(f"batch_size must be >= 1, got {batch_size}")
    order = epoch_order(len(items), seed, epoch) if shuffle else np.arange(len(items))
    return [
        collate([items[i] for i in order[start : start + batch_size]], dtype)
        for start in range(0, len(order), batch_size)
    ]


@dataclass(frozen=True)
class EpochRecord:
    """Mean per-stage and total loss over the batches of one epoch (1-based)."""

    epoch: int
    stage_losses: Tuple[float, ...]
    total: float

    def to_dict(self) -> Dict[str, Any]:
        return {"epoch": self.epoch, "stage_losses": list(self.stage_losses), "total": self.total}


@dataclass
class TrainResult:
    params: ModelParams
    trace: List[EpochRecord] = field(default_factory=list)
    checkpoint: Optional[str] = None

    @property
    def initial_loss(self) -> float:
        return self.trace[0].total

    @property
    def final_loss(self) -> float:
        return self.trace[-1].total


def adjacency_for(
    cfg: TrainConfig, graph: Optional[SkeletonGraph]
) -> Tuple[Optional[SkeletonGraph], Optional[PartitionedAdjacency]]:
    """Skeleton graph and partitioned adjacency a variant needs (None for TCN variants)."""
    if not cfg.model.uses_graph:
        return graph, None
    graph = graph if graph is not None else build_default_graph()
    return graph, partition(graph)


def _trace_dicts(trace: Sequence[EpochRecord]) -> List[Dict[str, Any]]:
    return [record.to_dict() for record in trace]


def train(
    items: Sequence[TrialFeatures],
    cfg: TrainConfig,
    graph: Optional[SkeletonGraph] = None,
    checkpoint_path: Optional[str] = None,
    params: Optional[ModelParams] = None,
) -> TrainResult:
    """
    Fit a network with Adam on the multi-stage objective.

    Args:
        items: Labelled training trials
        cfg: Optimization recipe with model and loss configuration
        graph: Skeleton graph; the default marker graph when omitted
        checkpoint_path: Where to save final parameters, if anywhere
        params: Starting parameters; freshly initialized from the seed when omitted

    Returns:
        Final-epoch parameters and the per-epoch loss trace

    Raises:
        TrainingDivergedError: If a batch loss is not finite; carries the partial trace
        NonFiniteGradientError: If a gradient is not finite; carries the partial trace
    """
    if not items:
        raise MsgcnValidationError("Training needs at least one trial")
    dtype = resolve_dtype(cfg.precision)
    graph, adj = adjacency_for(cfg, graph)
    num_nodes = items[0].features.shape[1]
    if adj is not None and adj.num_nodes != num_nodes:
        raise DimensionError(
            f"Trials have {num_nodes} markers but the skeleton graph has {adj.num_nodes} nodes"
        )
    if params is None:
        rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, INIT_STREAM]))
        params = ModelParams.initialize(cfg.model, num_nodes, rng, dtype)
    state = AdamState.from_config(cfg)
    trace: List[EpochRecord] = []
    logger.info(
        f"Training {cfg.model.variant} ({params.count()} parameters) on {len(items)} trials "
        f"for {cfg.epochs} epochs"
    )

    for epoch in range(1, cfg.epochs + 1):
        stage_sums = np.zeros(cfg.model.stage_count)
        batches = make_batches(items, cfg.batch_size, cfg.seed, epoch, dtype=dtype)
        for batch in batches:
            params.zero_grad()
            with Tape() as tape:
                outputs = forward(
                    DiffArray(batch.features, dtype=dtype), params, adj, batch.mask, training=True
                )
                terms = stage_loss_terms(outputs, batch.labels, batch.mask, cfg.loss)
                loss = add_n(terms)
            value = loss.item()
            if not math.isfinite(value):
                raise TrainingDivergedError(
                    f"Training loss became {value} in epoch {epoch}",
                    trace=_trace_dicts(trace),
                    epoch=epoch,
                )
            tape.backward(loss)
            try:
                adam_step(params, state)
            except NonFiniteGradientError as e:
                e.kwargs["trace"] = _trace_dicts(trace)
                e.kwargs["epoch"] = epoch
                raise
            stage_sums += [term.item() for term in terms]
            logger.debug(f"epoch {epoch} batch {batch.trial_ids}: loss {value:.6f}")

        stage_means = tuple(float(s) for s in stage_sums / len(batches))
        record = EpochRecord(epoch, stage_means, float(sum(stage_means)))
        trace.append(record)
        if epoch % cfg.log_every == 0 or epoch == cfg.epochs:
            logger.info(f"epoch {epoch}/{cfg.epochs}: loss {record.total:.6f}")

    result = TrainResult(params=params, trace=trace)
    if checkpoint_path:
        result.checkpoint = save_checkpoint(
            checkpoint_path,
            params,
            graph if cfg.model.uses_graph else None,
            metadata={"epochs": cfg.epochs, "seed": cfg.seed, "trials": len(items)},
        )
    return result


def write_loss_trace(trace: Sequence[EpochRecord], path: str) -> str:
    """Write ``epoch,stage_losses,total``; stage losses are ``;``-joined."""
    frame = pd.DataFrame(
        {
            "epoch": [r.epoch for r in trace],
            "stage_losses": [
                STAGE_LOSS_SEPARATOR.join(repr(float(v)) for v in r.stage_losses) for r in trace
            ],
            "total": [r.total for r in trace],
        },
        columns=list(LOSS_TRACE_COLUMNS),
    )
    frame.to_csv(path, index=False)
    logger.info(f"Loss trace of {len(trace)} epochs written to {path}")
    return path


def read_loss_trace(path: str) -> List[EpochRecord]:
    try:
        frame = pd.read_csv(path, dtype={"stage_losses": str}, float_precision="round_trip")
    except (OSError, ValueError) as e:
        raise TrialParseError(f"Unable to read loss trace {path}: {to_text(e)}", path=path)
    if tuple(frame.columns) != LOSS_TRACE_COLUMNS:
        raise TrialParseError(
            f"{path}:1: expected columns {','.join(LOSS_TRACE_COLUMNS)}", line=1, path=path
        )
    return [
        EpochRecord(
            epoch=int(row.epoch),
            stage_losses=tuple(float(v) for v in str(row.stage_losses).split(STAGE_LOSS_SEPARATOR)),
            total=float(row.total),
        )
        for row in frame.itertuples(index=False)
    ]

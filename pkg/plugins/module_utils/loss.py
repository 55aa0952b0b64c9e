# -*- coding: utf-8 -*-
"""
Multi-stage training objective.

Each stage contributes a classification term (cross entropy) plus a weighted
smoothing term (truncated squared difference of adjacent log-probabilities).
Every term is averaged per trial over its valid samples and then over the batch,
so trials weigh equally regardless of length.
"""

from __future__ import absolute_import, division, print_function

import logging
from typing import List, Sequence

import numpy as np

from .autodiff import (
    PROBABILITY_FLOOR,
    DiffArray,
    add,
    add_n,
    log_clamped,
    time_diff,
    truncated_square,
    weighted_sum,
)
from .config import LossConfig
from .exceptions import DimensionError, MsgcnValidationError

__metaclass__ = type

logger = logging.getLogger(__name__)


def _check_inputs(probs: DiffArray, mask: np.ndarray) -> np.ndarray:
    if probs.ndim != 3:
        raise DimensionError(f"expected probabilities [batch, class, time], got {probs.shape}")
    batch, _, steps = probs.shape
    mask = np.asarray(mask)
    if mask.shape != (batch, steps):
        raise DimensionError(f"mask shape {mask.shape} must be [batch={batch}, time={steps}]")
    return mask.astype(bool)


def cross_entropy(probs: DiffArray, labels: np.ndarray, mask: np.ndarray) -> DiffArray:
    """
    Mean negative log-likelihood of the labelled class.

    Probabilities are floored at 1e-12 before the log.

    Args:
        probs: Class probabilities [B, l, T]
        labels: Class indices [B, T]; values at masked samples are ignored
        mask: Validity mask [B, T]

    Returns:
        Scalar loss

    Raises:
        MsgcnValidationError: If some trial has no valid sample or a label is out of range
    """
    valid = _check_inputs(probs, mask)
    batch, classes, steps = probs.shape
    labels = np.asarray(labels)
    if labels.shape != (batch, steps):
        raise DimensionError(f"labels shape {labels.shape} must be [batch={batch}, time={steps}]")
    counts = valid.sum(axis=1)
    if np.any(counts == 0):
        raise MsgcnValidationError(
            f"cross entropy needs at least one valid sample per trial; empty trials: "
            f"{np.flatnonzero(counts == 0).tolist()}"
        )
    safe_labels = np.where(valid, labels, 0)
    if np.any((safe_labels < 0) | (safe_labels >= classes)):
        raise MsgcnValidationError(f"labels must lie in [0, {classes - 1}]")

    onehot = np.eye(classes, dtype=probs.dtype)[safe_labels].transpose(0, 2, 1)
    per_sample = valid / (counts[:, None] * batch)
    weights = -onehot * per_sample[:, None, :].astype(probs.dtype)
    return weighted_sum(log_clamped(probs, PROBABILITY_FLOOR), weights)


def truncated_smoothing_loss(
    probs: DiffArray, mask: np.ndarray, tau: float, scale: float = 1.0
) -> DiffArray:
    """
    Truncated mean squared difference of adjacent log-probabilities.

    Differences are clipped at ``tau``; the earlier sample of each pair is
    treated as a constant. Pairs touching a padded sample are excluded and each
    trial is normalized by (valid samples x classes).

    Args:
        probs: Class probabilities [B, l, T]
        mask: Validity mask [B, T]
        tau: Clipping threshold
        scale: Constant factor folded into the sum

    Returns:
        Scalar loss

    Raises:
        DimensionError: If fewer than two time steps are given
    """
    valid = _check_inputs(probs, mask)
    batch, classes, steps = probs.shape
    if steps < 2:
        raise DimensionError(f"smoothing loss needs at least 2 time steps, got {steps}")
    counts = np.maximum(valid.sum(axis=1), 1)
    pairs = valid[:, 1:] & valid[:, :-1]
    per_pair = scale * pairs / (counts[:, None] * classes * batch)
    weights = np.broadcast_to(per_pair[:, None, :], (batch, classes, steps - 1)).astype(
        probs.dtype
    )
    diffs = time_diff(log_clamped(probs, PROBABILITY_FLOOR), detach_previous=True)
    return weighted_sum(truncated_square(diffs, tau), weights)


def stage_loss_terms(
    stages: Sequence[DiffArray], labels: np.ndarray, mask: np.ndarray, cfg: LossConfig
) -> List[DiffArray]:
    """One scalar ``cross_entropy + lambda * smoothing`` per stage."""
    stages = getattr(stages, "stages", stages)
    if not stages:
        raise MsgcnValidationError("total loss needs at least one stage output")
    terms = []
    for probs in stages:
        ce = cross_entropy(probs, labels, mask)
        smooth = truncated_smoothing_loss(probs, mask, cfg.tau, scale=cfg.smoothing_weight)
        terms.append(add(ce, smooth))
    return terms


def total_loss(
    stages: Sequence[DiffArray], labels: np.ndarray, mask: np.ndarray, cfg: LossConfig
) -> DiffArray:
    """Sum of the per-stage objectives."""
    return add_n(stage_loss_terms(stages, labels, mask, cfg))

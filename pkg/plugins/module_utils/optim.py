# -*- coding: utf-8 -*-
"""
Adam optimizer over a ``ModelParams`` collection.
"""

from __future__ import absolute_import, division, print_function

import logging
from typing import Dict, Mapping, Optional

import numpy as np

from .config import TrainConfig
from .exceptions import NonFiniteGradientError

__metaclass__ = type

logger = logging.getLogger(__name__)


class AdamState:
    """
    First and second moment buffers keyed by parameter name.

    Buffers are created lazily with the shape and dtype of their parameter.
    """

    def __init__(
        self,
        lr: float = 0.0005,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ) -> None:
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m: Dict[str, np.ndarray] = {}
        self.v: Dict[str, np.ndarray] = {}
        self.step = 0

    @classmethod
    def from_config(cls, cfg: TrainConfig) -> "AdamState":
        return cls(lr=cfg.learning_rate, beta1=cfg.beta1, beta2=cfg.beta2, eps=cfg.adam_eps)


def adam_step(
    params,
    state: AdamState,
    grads: Optional[Mapping[str, np.ndarray]] = None,
) -> None:
    """
    Apply one bias-corrected Adam update in place.

    Every gradient is checked before any parameter moves, so a failing step
    leaves parameters, moments and the step counter untouched.

    Args:
        params: Collection yielding ``(name, DiffArray)`` pairs through ``items()``
        state: Optimizer state, updated in place
        grads: Gradients by name; defaults to each parameter's ``.grad``

    Raises:
        NonFiniteGradientError: If any gradient holds NaN or Inf
    """
    named = list(params.items())
    resolved = {}
    for name, array in named:
        g = array.grad if grads is None else grads[name]
        if g is None:
            g = np.zeros_like(array.values)
        if not np.all(np.isfinite(g)):
            raise NonFiniteGradientError(
                f"Gradient of parameter '{name}' is not finite", parameter=name
            )
        resolved[name] = g

    state.step += 1
    bc1 = 1.0 - state.beta1**state.step
    bc2 = 1.0 - state.beta2**state.step
    for name, array in named:
        g = resolved[name]
        if name not in state.m:
            state.m[name] = np.zeros_like(array.values)
            state.v[name] = np.zeros_like(array.values)
        m = state.m[name]
        v = state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        array.values -= state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
    logger.debug(f"Adam step {state.step} applied to {len(named)} parameters")

# -*- coding: utf-8 -*-
"""
Reverse-mode differentiation over numpy arrays.

This module provides the small operator set every MS-GCN layer and the
training objective are expressed in. Operations record themselves on the
thread's active ``Tape`` whenever at least one input is tracked; ``backward``
then replays the tape in reverse and accumulates gradients into tracked leaves.

Feature maps carry a leading batch axis: ``[B, C, T]`` for temporal maps and
``[B, C, N, T]`` for per-node maps. Validity masks are ``[B, T]``.
"""

from __future__ import absolute_import, division, print_function

import logging
import threading
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .exceptions import (
    ConfigurationError,
    DegenerateStatisticsError,
    DimensionError,
    TapeUsageError,
)

__metaclass__ = type

logger = logging.getLogger(__name__)

DEFAULT_DTYPE = np.float64
SUPPORTED_PRECISIONS = {"float64": np.float64, "float32": np.float32}
BN_MOMENTUM = 0.1
BN_EPS = 1e-5
PROBABILITY_FLOOR = 1e-12

ArrayLike = Union[np.ndarray, Sequence, float]
BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]

_thread_state = threading.local()


def resolve_dtype(precision: str) -> type:
    """Map a precision name onto a numpy dtype.

    Raises:
        ConfigurationError: If the precision is not supported
    """
    try:
        return SUPPORTED_PRECISIONS[precision]
    except KeyError:
        raise ConfigurationError(
            f"Precision '{precision}' is not valid. Must be one of: "
            f"{', '.join(SUPPORTED_PRECISIONS)}"
        )


class DiffArray:
    """
    Real array with an optional accumulated gradient.

    Leaves created with ``track=True`` own a same-shape ``grad`` buffer that
    ``backward`` accumulates into. Arrays produced by operations are tracked
    when any input is, but only leaves keep a gradient.
    """

    __slots__ = ("values", "grad", "track", "_leaf", "_tape")

    def __init__(
        self, values: ArrayLike, track: bool = False, dtype: Optional[type] = None
    ) -> None:
        if dtype is None:
            if isinstance(values, np.ndarray) and np.issubdtype(
                values.dtype, np.floating
            ):
                dtype = values.dtype
            else:
                dtype = DEFAULT_DTYPE
        self.values: np.ndarray = np.array(values, dtype=dtype)
        self.track = bool(track)
        self._leaf = True
        self._tape: Optional["Tape"] = None
        self.grad: Optional[np.ndarray] = (
            np.zeros_like(self.values) if self.track else None
        )

    @classmethod
    def _from_op(cls, values: np.ndarray, track: bool) -> "DiffArray":
        out = cls.__new__(cls)
        out.values = values
        out.track = track
        out._leaf = False
        out._tape = None
        out.grad = None
        return out

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.values.shape

    @property
    def ndim(self) -> int:
        return self.values.ndim

    @property
    def dtype(self) -> np.dtype:
        return self.values.dtype

    @property
    def is_leaf(self) -> bool:
        return self._leaf

    def item(self) -> float:
        return float(self.values.reshape(-1)[0])

    def zero_grad(self) -> None:
        """Reset the accumulated gradient of a tracked leaf."""
        if self.track and self._leaf:
            self.grad = np.zeros_like(self.values)

    def __add__(self, other: "DiffArray") -> "DiffArray":
        return add(self, other)

    def __repr__(self) -> str:
        return f"DiffArray(shape={self.shape}, dtype={self.dtype}, track={self.track})"


class _Node:
    __slots__ = ("output", "inputs", "backward")

    def __init__(
        self, output: DiffArray, inputs: Sequence[DiffArray], backward: BackwardFn
    ) -> None:
        self.output = output
        self.inputs = tuple(inputs)
        self.backward = backward


class Tape:
    """
    Ordered record of executed operations.

    Enter the tape as a context manager around a forward pass, then call
    ``backward`` once with the scalar result. The tape is thread-local: a pass
    recorded on one thread is invisible to every other thread.
    """

    def __init__(self) -> None:
        self._nodes: List[_Node] = []
        self._replayed = False

    def __enter__(self) -> "Tape":
        stack = getattr(_thread_state, "stack", None)
        if stack is None:
            stack = _thread_state.stack = []
        stack.append(self)
        return self

    def __exit__(self, exc_type, exc_val, exc_tb) -> None:
        _thread_state.stack.pop()

    def __len__(self) -> int:
        return len(self._nodes)

    def record(self, node: _Node) -> None:
        if self._replayed:
            raise TapeUsageError("Cannot record on a tape that was already replayed")
        self._nodes.append(node)

    def backward(self, root: DiffArray) -> None:
        """
        Replay the tape in reverse execution order from a scalar root.

        Args:
            root: Scalar produced by an operation recorded on this tape

        Raises:
            TapeUsageError: If the root is not scalar, is not on this tape,
                or the tape was already replayed
        """
        if self._replayed:
            raise TapeUsageError(
                "Tape was already replayed; run the forward pass again before backward"
            )
        if root.values.size != 1:
            raise TapeUsageError(
                f"backward requires a scalar root, got shape {root.shape}"
            )
        if root._tape is not self:
            raise TapeUsageError("backward root was not recorded on this tape")

        grads = {id(root): np.ones_like(root.values)}
        for node in reversed(self._nodes):
            grad_out = grads.pop(id(node.output), None)
            if grad_out is None:
                continue
            for inp, grad_in in zip(node.inputs, node.backward(grad_out)):
                if grad_in is None or not inp.track:
                    continue
                if inp.is_leaf:
                    inp.grad += grad_in
                else:
                    key = id(inp)
                    if key in grads:
                        grads[key] = grads[key] + grad_in
                    else:
                        grads[key] = grad_in

        self._replayed = True
        self._nodes = []
        logger.debug("Tape replayed")


def active_tape() -> Optional[Tape]:
    stack = getattr(_thread_state, "stack", None)
    return stack[-1] if stack else None


def backward(scalar_loss: DiffArray) -> None:
    """Backpropagate from a scalar produced on the active thread's tape.

    Raises:
        TapeUsageError: If the loss was not recorded on any tape
    """
    if scalar_loss._tape is None:
        raise TapeUsageError(
            "backward root is not on a tape (no tracked input or no active tape)"
        )
    scalar_loss._tape.backward(scalar_loss)


def record_op(
    values: np.ndarray, inputs: Sequence[DiffArray], backward_fn: BackwardFn
) -> DiffArray:
    """
    Wrap an operation result and record it on the active tape.

    Args:
        values: Forward result
        inputs: Operands, in the order ``backward_fn`` returns their gradients
        backward_fn: Maps the output gradient to one gradient (or None) per input

    Returns:
        The result, tracked when a tape is active and any input is tracked
    """
    tape = active_tape()
    track = tape is not None and any(inp.track for inp in inputs)
    out = DiffArray._from_op(values, track)
    if track:
        out._tape = tape
        tape.record(_Node(out, inputs, backward_fn))
    return out


def channel_matmul(w: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Contract ``w`` [C_out, C] with axis 1 of ``x`` [B, C, ...]."""
    batch, channels = x.shape[:2]
    out = np.matmul(w, x.reshape(batch, channels, -1))
    return out.reshape((batch, w.shape[0]) + x.shape[2:])


def _channel_shape(ndim: int, channels: int) -> Tuple[int, ...]:
    return (1, channels) + (1,) * (ndim - 2)


def _time_mask(mask: np.ndarray, ndim: int, dtype: np.dtype) -> np.ndarray:
    batch, steps = mask.shape
    return mask.astype(dtype).reshape((batch, 1) + (1,) * (ndim - 3) + (steps,))


def _check_mask(x: DiffArray, mask: np.ndarray, op: str) -> None:
    if mask.ndim != 2 or mask.shape != (x.shape[0], x.shape[-1]):
        raise DimensionError(
            f"{op}: mask shape {mask.shape} must be [batch={x.shape[0]}, time={x.shape[-1]}]"
        )


def pointwise_conv(
    x: DiffArray, w: DiffArray, b: Optional[DiffArray] = None
) -> DiffArray:
    """
    Apply a 1x1 convolution over the channel axis.

    Args:
        x: Input map [B, C_in, ..., T]
        w: Weights [C_out, C_in]
        b: Optional bias [C_out]

    Returns:
        Output map [B, C_out, ..., T]

    Raises:
        DimensionError: If channel extents disagree
    """
    if x.ndim < 3:
        raise DimensionError(
            f"pointwise_conv expects input [batch, channel, ..., time], got shape {x.shape}"
        )
    if w.ndim != 2 or w.shape[1] != x.shape[1]:
        raise DimensionError(
            f"pointwise_conv: weight axis 1 (C_in={w.shape[1] if w.ndim == 2 else w.shape}) "
            f"does not match input axis 1 (C={x.shape[1]})"
        )
    if b is not None and b.shape != (w.shape[0],):
        raise DimensionError(
            f"pointwise_conv: bias axis 0 ({b.shape}) does not match weight axis 0 (C_out={w.shape[0]})"
        )

    batch, c_in = x.shape[:2]
    c_out = w.shape[0]
    rest = x.shape[2:]
    wv = w.values
    x3 = x.values.reshape(batch, c_in, -1)
    out = np.matmul(wv, x3).reshape((batch, c_out) + rest)
    if b is not None:
        out = out + b.values.reshape(_channel_shape(out.ndim, c_out))

    def backward_fn(g: np.ndarray) -> List[Optional[np.ndarray]]:
        g3 = g.reshape(batch, c_out, -1)
        gx = np.matmul(wv.T, g3).reshape(x.shape)
        gw = np.matmul(g3, x3.transpose(0, 2, 1)).sum(axis=0)
        grads = [gx, gw]
        if b is not None:
            grads.append(g3.sum(axis=(0, 2)))
        return grads

    inputs = [x, w] + ([b] if b is not None else [])
    return record_op(out, inputs, backward_fn)


def dilated_conv1d(
    x: DiffArray,
    w: DiffArray,
    b: Optional[DiffArray],
    dilation: int,
    acausal: bool = True,
) -> DiffArray:
    """
    Dilated temporal convolution along the last axis with length-preserving zero padding.

    Trailing axes between channel and time (e.g. nodes) share the kernel.

    Args:
        x: Input map [B, C, ..., T]
        w: Kernel [C_out, C, k]
        b: Optional bias [C_out]
        dilation: Spacing between kernel taps (>= 1)
        acausal: Pad symmetrically so each output sees past and future samples

    Returns:
        Output map [B, C_out, ..., T]

    Raises:
        ConfigurationError: For dilation < 1 or an even kernel in acausal mode
        DimensionError: If channel extents disagree
    """
    if dilation < 1:
        raise ConfigurationError(f"dilation must be >= 1, got {dilation}")
    if w.ndim != 3:
        raise DimensionError(f"dilated_conv1d: kernel must be [C_out, C, k], got {w.shape}")
    k = w.shape[2]
    if acausal and k % 2 == 0:
        raise ConfigurationError(f"acausal convolution requires an odd kernel, got k={k}")
    if x.ndim < 3 or w.shape[1] != x.shape[1]:
        raise DimensionError(
            f"dilated_conv1d: kernel axis 1 (C={w.shape[1]}) does not match input axis 1 "
            f"(shape {x.shape})"
        )
    if b is not None and b.shape != (w.shape[0],):
        raise DimensionError(
            f"dilated_conv1d: bias axis 0 ({b.shape}) does not match kernel axis 0 (C_out={w.shape[0]})"
        )

    batch, channels = x.shape[:2]
    steps = x.shape[-1]
    c_out = w.shape[0]
    reach = dilation * (k - 1)
    left = reach // 2 if acausal else reach
    padded = np.pad(
        x.values.reshape(batch, channels, -1, steps),
        ((0, 0), (0, 0), (0, 0), (left, reach - left)),
    )
    sites = padded.shape[2]
    w2 = w.values.reshape(c_out, channels * k)

    def unfold() -> np.ndarray:
        taps = [padded[..., j * dilation : j * dilation + steps] for j in range(k)]
        return np.stack(taps, axis=2).reshape(batch, channels * k, sites * steps)

    out = np.matmul(w2, unfold()).reshape((batch, c_out) + x.shape[2:])
    if b is not None:
        out = out + b.values.reshape(_channel_shape(out.ndim, c_out))

    def backward_fn(g: np.ndarray) -> List[Optional[np.ndarray]]:
        g3 = g.reshape(batch, c_out, sites * steps)
        cols = unfold()
        gw = np.matmul(g3, cols.transpose(0, 2, 1)).sum(axis=0).reshape(w.shape)
        del cols
        gcols = np.matmul(w2.T, g3).reshape(batch, channels, k, sites, steps)
        gpad = np.zeros_like(padded)
        for j in range(k):
            gpad[..., j * dilation : j * dilation + steps] += gcols[:, :, j]
        gx = gpad[..., left : left + steps].reshape(x.shape)
        grads = [gx, gw]
        if b is not None:
            grads.append(g3.sum(axis=(0, 2)))
        return grads

    inputs = [x, w] + ([b] if b is not None else [])
    return record_op(out, inputs, backward_fn)


class BatchNormState:
    """Running statistics of one batch-norm layer.

    ``running_mean`` and ``running_var`` are updated in place, so a state built
    over arrays owned by a parameter collection writes straight through to it.
    """

    def __init__(
        self,
        running_mean: np.ndarray,
        running_var: np.ndarray,
        momentum: float = BN_MOMENTUM,
        eps: float = BN_EPS,
    ) -> None:
        self.running_mean = running_mean
        self.running_var = running_var
        self.momentum = momentum
        self.eps = eps

    @classmethod
    def fresh(cls, channels: int, dtype: type = DEFAULT_DTYPE, **kwargs) -> "BatchNormState":
        return cls(np.zeros(channels, dtype=dtype), np.ones(channels, dtype=dtype), **kwargs)

    def update(self, mean: np.ndarray, unbiased_var: np.ndarray) -> None:
        self.running_mean *= 1.0 - self.momentum
        self.running_mean += self.momentum * mean
        self.running_var *= 1.0 - self.momentum
        self.running_var += self.momentum * unbiased_var


def batch_norm(
    x: DiffArray,
    gamma: DiffArray,
    beta: DiffArray,
    state: BatchNormState,
    training: bool,
    mask: Optional[np.ndarray] = None,
) -> DiffArray:
    """
    Per-channel batch normalization with optional sample-validity masking.

    In training mode statistics are taken over every valid (batch, ..., time)
    position of a channel and the running statistics are updated; in eval mode
    the running statistics are used. Masked positions of the output are zero.

    Args:
        x: Input map [B, C, ..., T]
        gamma: Per-channel gain [C]
        beta: Per-channel offset [C]
        state: Running statistics
        training: Use batch statistics and update the running ones
        mask: Optional validity mask [B, T]

    Returns:
        Normalized map with the shape of ``x``

    Raises:
        DimensionError: If gain, offset or mask do not fit the input
        DegenerateStatisticsError: If a training batch has fewer than two valid samples
    """
    channels = x.shape[1]
    if gamma.shape != (channels,) or beta.shape != (channels,):
        raise DimensionError(
            f"batch_norm: gamma {gamma.shape} / beta {beta.shape} must match channel axis C={channels}"
        )
    if state.running_mean.shape != (channels,):
        raise DimensionError(
            f"batch_norm: running statistics {state.running_mean.shape} must match channel axis C={channels}"
        )
    xv = x.values
    cshape = _channel_shape(x.ndim, channels)
    axes = (0,) + tuple(range(2, x.ndim))
    m = None
    if mask is not None:
        _check_mask(x, mask, "batch_norm")
        m = _time_mask(mask, x.ndim, xv.dtype)

    if training:
        per_channel = xv.size // channels
        if m is None:
            count = float(per_channel)
        else:
            count = float(m.sum()) * (per_channel // (xv.shape[0] * xv.shape[-1]))
        if count < 2:
            raise DegenerateStatisticsError(
                f"batch_norm needs at least 2 valid samples per channel, got {int(count)}",
                valid_samples=int(count),
            )
        mean = xv.mean(axis=axes) if m is None else (xv * m).sum(axis=axes) / count
        centered = xv - mean.reshape(cshape)
        sq = centered * centered
        var = (sq if m is None else sq * m).sum(axis=axes) / count
        state.update(mean, var * (count / (count - 1.0)))
    else:
        count = None
        var = state.running_var
        centered = xv - state.running_mean.reshape(cshape)

    inv = (1.0 / np.sqrt(var + state.eps)).reshape(cshape)
    xhat = centered * inv
    gv = gamma.values.reshape(cshape)
    out = xhat * gv + beta.values.reshape(cshape)
    if m is not None:
        out = out * m

    def backward_fn(g: np.ndarray) -> List[Optional[np.ndarray]]:
        if m is not None:
            g = g * m
        gbeta = g.sum(axis=axes)
        ggamma = (g * xhat).sum(axis=axes)
        dxhat = g * gv
        if training:
            sum_d = dxhat.sum(axis=axes).reshape(cshape)
            sum_dx = (dxhat * xhat).sum(axis=axes).reshape(cshape)
            gx = (inv / count) * (count * dxhat - sum_d - xhat * sum_dx)
            if m is not None:
                gx = gx * m
        else:
            gx = dxhat * inv
        return [gx, ggamma, gbeta]

    return record_op(out, [x, gamma, beta], backward_fn)


def relu(x: DiffArray) -> DiffArray:
    """Elementwise max(0, x)."""
    active = x.values > 0
    out = np.where(active, x.values, 0.0).astype(x.dtype, copy=False)
    return record_op(out, [x], lambda g: [g * active])


def softmax_over_classes(x: DiffArray) -> DiffArray:
    """Softmax along the class axis (axis 1) for every sample."""
    if x.ndim < 2:
        raise DimensionError(f"softmax_over_classes expects [batch, class, ...], got {x.shape}")
    shifted = x.values - x.values.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    p = e / e.sum(axis=1, keepdims=True)

    def backward_fn(g: np.ndarray) -> List[np.ndarray]:
        return [p * (g - (g * p).sum(axis=1, keepdims=True))]

    return record_op(p, [x], backward_fn)


def mean_pool_nodes(x: DiffArray) -> DiffArray:
    """Average a per-node map [B, C, N, T] over its node axis."""
    if x.ndim != 4:
        raise DimensionError(f"mean_pool_nodes expects [batch, channel, node, time], got {x.shape}")
    nodes = x.shape[2]
    out = x.values.mean(axis=2)

    def backward_fn(g: np.ndarray) -> List[np.ndarray]:
        return [np.broadcast_to(g[:, :, None, :] / nodes, x.shape).copy()]

    return record_op(out, [x], backward_fn)


def add(x: DiffArray, y: DiffArray) -> DiffArray:
    if x.shape != y.shape:
        raise DimensionError(f"add: shapes {x.shape} and {y.shape} differ")
    return record_op(x.values + y.values, [x, y], lambda g: [g, g])


def apply_mask(x: DiffArray, mask: np.ndarray) -> DiffArray:
    """Zero every padded time position of ``x``."""
    _check_mask(x, mask, "apply_mask")
    m = _time_mask(mask, x.ndim, x.dtype)
    return record_op(x.values * m, [x], lambda g: [g * m])


def reshape(x: DiffArray, shape: Sequence[int]) -> DiffArray:
    """View ``x`` with a new shape holding the same number of entries."""
    out = x.values.reshape(tuple(shape))
    return record_op(out, [x], lambda g: [g.reshape(x.shape)])


def log_clamped(x: DiffArray, floor: float = PROBABILITY_FLOOR) -> DiffArray:
    """Natural log of ``max(x, floor)``; NaN propagates and floored entries pass no gradient."""
    above = x.values > floor
    safe = np.maximum(x.values, floor)
    out = np.log(safe)
    return record_op(out, [x], lambda g: [np.where(above, g / safe, 0.0)])


def time_diff(x: DiffArray, detach_previous: bool = True) -> DiffArray:
    """
    First difference along time: out[..., t] = x[..., t + 1] - x[..., t].

    With ``detach_previous`` the gradient reaches only the later sample of
    each pair.
    """
    if x.shape[-1] < 2:
        raise DimensionError(f"time_diff needs at least 2 time steps, got shape {x.shape}")
    out = x.values[..., 1:] - x.values[..., :-1]

    def backward_fn(g: np.ndarray) -> List[np.ndarray]:
        gx = np.zeros_like(x.values)
        gx[..., 1:] += g
        if not detach_previous:
            gx[..., :-1] -= g
        return [gx]

    return record_op(out, [x], backward_fn)


def truncated_square(x: DiffArray, tau: float) -> DiffArray:
    """min(|x|, tau) squared; entries with |x| >= tau pass no gradient."""
    inside = np.abs(x.values) < tau
    clipped = np.where(inside, np.abs(x.values), tau)
    return record_op(clipped * clipped, [x], lambda g: [np.where(inside, 2.0 * g * x.values, 0.0)])


def weighted_sum(x: DiffArray, weights: np.ndarray) -> DiffArray:
    """
    Scalar sum of ``x * weights`` for a constant weight array.

    Entries with zero weight contribute an exact +0.0 whatever ``x`` holds.
    """
    if x.shape != weights.shape:
        raise DimensionError(f"weighted_sum: shapes {x.shape} and {weights.shape} differ")
    live = weights != 0
    out = np.array(np.where(live, x.values * weights, 0.0).sum(), dtype=x.dtype)
    return record_op(out, [x], lambda g: [np.where(live, g * weights, 0.0)])


def add_n(terms: Sequence[DiffArray]) -> DiffArray:
    """Sum a non-empty sequence of same-shape arrays left to right."""
    if not terms:
        raise DimensionError("add_n needs at least one term")
    total = terms[0]
    for term in terms[1:]:
        total = add(total, term)
    return total

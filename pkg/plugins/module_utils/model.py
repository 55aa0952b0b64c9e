# -*- coding: utf-8 -*-
"""
MS-GCN network and its ablation variants.

A prediction-generation stage (ST-GCN blocks over the marker graph, or TCN
blocks over node-collapsed channels) produces an initial per-sample class
distribution; each refinement stage re-predicts it from the previous stage's
softmax with a stack of dilated TCN blocks.
"""

from __future__ import absolute_import, division, print_function

import logging
from dataclasses import dataclass
from typing import Dict, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .autodiff import (
    BatchNormState,
    DiffArray,
    add,
    apply_mask,
    batch_norm,
    dilated_conv1d,
    mean_pool_nodes,
    pointwise_conv,
    relu,
    reshape,
    softmax_over_classes,
)
from .config import ModelConfig
from .exceptions import ConfigurationError, DimensionError
from .skeleton import DEFAULT_MARKERS, NUM_PARTITIONS, PartitionedAdjacency, graph_conv

__metaclass__ = type

FG = 0
FOG = 1
CLASS_NAMES = ("FG", "FOG")

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ParamSpec:
    name: str
    shape: Tuple[int, ...]
    kind: str
    fan_in: int = 1

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))


def _conv_specs(name: str, c_out: int, c_in: int, kernel: int) -> List[ParamSpec]:
    shape = (c_out, c_in) if kernel == 1 else (c_out, c_in, kernel)
    return [
        ParamSpec(f"{name}.weight", shape, "weight", c_in * kernel),
        ParamSpec(f"{name}.bias", (c_out,), "bias"),
    ]


def _bn_specs(name: str, channels: int) -> List[ParamSpec]:
    return [
        ParamSpec(f"{name}.gamma", (channels,), "gamma"),
        ParamSpec(f"{name}.beta", (channels,), "beta"),
    ]


def stage_input_channels(config: ModelConfig, num_nodes: int) -> int:
    if config.uses_graph:
        return config.in_channels
    return config.in_channels * num_nodes


def parameter_specs(
    config: ModelConfig,
    num_nodes: int = len(DEFAULT_MARKERS),
    num_partitions: int = NUM_PARTITIONS,
) -> List[ParamSpec]:
    """
    Enumerate every learnable array of a configuration, in initialization order.

    Args:
        config: Network architecture
        num_nodes: Marker count N of the skeleton graph
        num_partitions: Partition count P of the graph convolution

    Returns:
        Parameter specifications; names are ``stage<S>.<part>.<array>``
    """
    c = config.channels
    specs: List[ParamSpec] = []
    for stage in range(config.stage_count):
        prefix = f"stage{stage}"
        if stage == 0:
            in_ch = stage_input_channels(config, num_nodes)
            specs += _bn_specs(f"{prefix}.input_bn", in_ch)
        else:
            in_ch = config.num_classes
        specs += _conv_specs(f"{prefix}.conv_in", c, in_ch, 1)
        for i in range(config.layers_per_stage):
            layer = f"{prefix}.layer{i}"
            if stage == 0 and config.uses_graph:
                specs += [
                    ParamSpec(f"{layer}.gcn.weight.{p}", (c, c), "weight", c)
                    for p in range(num_partitions)
                ]
                specs += [
                    ParamSpec(f"{layer}.gcn.mask.{p}", (num_nodes, num_nodes), "mask")
                    for p in range(num_partitions)
                ]
                specs += _bn_specs(f"{layer}.gcn_bn", c)
            specs += _conv_specs(f"{layer}.tcn", c, c, config.kernel_size)
            specs += _bn_specs(f"{layer}.tcn_bn", c)
        specs += _conv_specs(f"{prefix}.conv_out", config.num_classes, c, 1)
    return specs


def buffer_specs(params: Sequence[ParamSpec]) -> List[Tuple[str, int]]:
    """Running-statistics buffers, one mean/var pair per batch-norm layer."""
    buffers = []
    for spec in params:
        if spec.kind == "gamma":
            layer = spec.name[: -len(".gamma")]
            buffers.append((f"{layer}.running_mean", spec.shape[0]))
            buffers.append((f"{layer}.running_var", spec.shape[0]))
    return buffers


def count_params(config: ModelConfig, num_nodes: int = len(DEFAULT_MARKERS)) -> int:
    """Exact number of learnable scalars (running statistics excluded)."""
    return sum(spec.size for spec in parameter_specs(config, num_nodes))


class ModelParams:
    """
    Named parameter collection of one network plus its batch-norm buffers.

    Parameters are tracked ``DiffArray`` leaves; buffers are plain arrays
    updated in place by training-mode forwards.
    """

    def __init__(
        self,
        config: ModelConfig,
        num_nodes: int,
        arrays: Mapping[str, DiffArray],
        buffers: Mapping[str, np.ndarray],
    ) -> None:
        self.config = config
        self.num_nodes = num_nodes
        self._arrays: Dict[str, DiffArray] = dict(arrays)
        self.buffers: Dict[str, np.ndarray] = dict(buffers)

    @classmethod
    def initialize(
        cls,
        config: ModelConfig,
        num_nodes: int = len(DEFAULT_MARKERS),
        rng: Optional[np.random.Generator] = None,
        dtype: type = np.float64,
    ) -> "ModelParams":
        """
        Draw fresh parameters.

        Convolution weights are He-uniform on [-sqrt(6 / fan_in), sqrt(6 / fan_in)];
        biases and BN offsets start at 0; attention masks and BN gains at 1.

        Args:
            config: Network architecture
            num_nodes: Marker count N
            rng: Source of randomness, consumed in parameter order
            dtype: Floating precision of every array

        Returns:
            The initialized collection
        """
        rng = rng if rng is not None else np.random.default_rng(0)
        specs = parameter_specs(config, num_nodes)
        arrays: Dict[str, DiffArray] = {}
        for spec in specs:
            if spec.kind == "weight":
                bound = np.sqrt(6.0 / spec.fan_in)
                values = rng.uniform(-bound, bound, size=spec.shape)
            elif spec.kind in ("mask", "gamma"):
                values = np.ones(spec.shape)
            else:
                values = np.zeros(spec.shape)
            arrays[spec.name] = DiffArray(values, track=True, dtype=dtype)
        buffers = {
            name: (np.zeros if name.endswith("running_mean") else np.ones)(size, dtype=dtype)
            for name, size in buffer_specs(specs)
        }
        logger.debug(
            f"Initialized {config.variant} with {sum(s.size for s in specs)} parameters"
        )
        return cls(config, num_nodes, arrays, buffers)

    @classmethod
    def from_state(
        cls,
        config: ModelConfig,
        num_nodes: int,
        state: Mapping[str, np.ndarray],
        dtype: Optional[type] = None,
    ) -> "ModelParams":
        """
        Rebuild a collection from named arrays, validating names and shapes.

        Raises:
            ConfigurationError: If arrays are missing, unexpected or misshapen
        """
        specs = parameter_specs(config, num_nodes)
        expected = {spec.name: spec.shape for spec in specs}
        expected.update({name: (size,) for name, size in buffer_specs(specs)})
        missing = sorted(set(expected) - set(state))
        unexpected = sorted(set(state) - set(expected))
        if missing or unexpected:
            raise ConfigurationError(
                f"Parameter arrays do not match the configuration: "
                f"missing={missing[:5]}, unexpected={unexpected[:5]}",
                missing=missing,
                unexpected=unexpected,
            )
        for name, shape in expected.items():
            if tuple(state[name].shape) != tuple(shape):
                raise ConfigurationError(
                    f"Array {name} has shape {tuple(state[name].shape)}, expected {tuple(shape)}",
                    parameter=name,
                )
        arrays = {
            spec.name: DiffArray(state[spec.name], track=True, dtype=dtype) for spec in specs
        }
        buffers = {
            name: np.array(state[name], dtype=dtype or state[name].dtype)
            for name, _ in buffer_specs(specs)
        }
        return cls(config, num_nodes, arrays, buffers)

    def __getitem__(self, name: str) -> DiffArray:
        try:
            return self._arrays[name]
        except KeyError:
            raise ConfigurationError(f"Unknown parameter '{name}'", parameter=name)

    def __contains__(self, name: object) -> bool:
        return name in self._arrays

    def __iter__(self) -> Iterator[str]:
        return iter(self._arrays)

    def __len__(self) -> int:
        return len(self._arrays)

    def items(self) -> Iterator[Tuple[str, DiffArray]]:
        return iter(self._arrays.items())

    @property
    def dtype(self) -> np.dtype:
        return next(iter(self._arrays.values())).dtype

    def count(self) -> int:
        return sum(array.values.size for array in self._arrays.values())

    def zero_grad(self) -> None:
        for array in self._arrays.values():
            array.zero_grad()

    def bn_state(self, layer: str) -> BatchNormState:
        return BatchNormState(
            self.buffers[f"{layer}.running_mean"],
            self.buffers[f"{layer}.running_var"],
            momentum=self.config.bn_momentum,
            eps=self.config.bn_eps,
        )

    def state_dict(self) -> Dict[str, np.ndarray]:
        """Every parameter and buffer by name; parameters first, in spec order."""
        state = {name: array.values for name, array in self._arrays.items()}
        state.update(self.buffers)
        return state

    def copy(self) -> "ModelParams":
        return ModelParams.from_state(
            self.config, self.num_nodes, {k: v.copy() for k, v in self.state_dict().items()}
        )


@dataclass(frozen=True)
class StageOutputs:
    """Per-stage class probabilities [B, l, T]; the last stage is final."""

    stages: Tuple[DiffArray, ...]

    def __len__(self) -> int:
        return len(self.stages)

    @property
    def final(self) -> DiffArray:
        return self.stages[-1]

    def probabilities(self, stage: int = -1) -> np.ndarray:
        return self.stages[stage].values

    def predictions(self, stage: int = -1) -> np.ndarray:
        """Argmax over classes; ties resolve toward the lower class index (FG)."""
        return np.argmax(self.stages[stage].values, axis=1)


def _batch_norm(
    h: DiffArray, params: ModelParams, layer: str, mask: np.ndarray, training: bool
) -> DiffArray:
    return batch_norm(
        h,
        params[f"{layer}.gamma"],
        params[f"{layer}.beta"],
        params.bn_state(layer),
        training,
        mask,
    )


def stgcn_block(
    f: DiffArray,
    params: ModelParams,
    prefix: str,
    adj: PartitionedAdjacency,
    dilation: int,
    mask: np.ndarray,
    training: bool = False,
) -> DiffArray:
    """
    Spatial-temporal residual block on a per-node map [B, C, N, T].

    graph conv, BN, ReLU, dilated temporal conv per node, BN, ReLU, then the
    block input is added back and padded samples are zeroed.

    Raises:
        DimensionError: If the block changes the map's shape
    """
    masks = [params[f"{prefix}.gcn.mask.{p}"] for p in range(adj.num_partitions)]
    weights = [params[f"{prefix}.gcn.weight.{p}"] for p in range(adj.num_partitions)]
    h = graph_conv(f, adj, masks, weights)
    h = relu(_batch_norm(h, params, f"{prefix}.gcn_bn", mask, training))
    h = dilated_conv1d(
        h,
        params[f"{prefix}.tcn.weight"],
        params[f"{prefix}.tcn.bias"],
        dilation,
        params.config.acausal,
    )
    h = relu(_batch_norm(h, params, f"{prefix}.tcn_bn", mask, training))
    if h.shape != f.shape:
        raise DimensionError(f"stgcn_block {prefix}: output {h.shape} drifted from input {f.shape}")
    return apply_mask(add(h, f), mask)


def tcn_block(
    f: DiffArray,
    params: ModelParams,
    prefix: str,
    dilation: int,
    mask: np.ndarray,
    training: bool = False,
) -> DiffArray:
    """Dilated temporal residual block on a map [B, C, T]."""
    h = dilated_conv1d(
        f,
        params[f"{prefix}.tcn.weight"],
        params[f"{prefix}.tcn.bias"],
        dilation,
        params.config.acausal,
    )
    h = relu(_batch_norm(h, params, f"{prefix}.tcn_bn", mask, training))
    if h.shape != f.shape:
        raise DimensionError(f"tcn_block {prefix}: output {h.shape} drifted from input {f.shape}")
    return apply_mask(add(h, f), mask)


def generation_stage(
    x: DiffArray,
    params: ModelParams,
    adj: Optional[PartitionedAdjacency],
    mask: np.ndarray,
    training: bool = False,
) -> DiffArray:
    """
    Initial prediction from displacement features [B, C_in, N, T].

    Returns:
        Class probabilities [B, l, T]

    Raises:
        DimensionError: If channel or node extents disagree with the configuration
    """
    config = params.config
    if x.ndim != 4 or x.shape[1] != config.in_channels or x.shape[2] != params.num_nodes:
        raise DimensionError(
            f"generation stage expects features [batch, C_in={config.in_channels}, "
            f"N={params.num_nodes}, time], got {x.shape}"
        )
    if config.uses_graph:
        if adj is None or adj.num_nodes != x.shape[2]:
            raise DimensionError(
                f"feature node axis (N={x.shape[2]}) does not match the adjacency "
                f"(N={None if adj is None else adj.num_nodes})"
            )
        h = x
    else:
        batch, channels, nodes, steps = x.shape
        h = reshape(x, (batch, channels * nodes, steps))

    h = _batch_norm(h, params, "stage0.input_bn", mask, training)
    h = apply_mask(
        pointwise_conv(h, params["stage0.conv_in.weight"], params["stage0.conv_in.bias"]),
        mask,
    )
    for i, dilation in enumerate(config.dilations):
        prefix = f"stage0.layer{i}"
        if config.uses_graph:
            h = stgcn_block(h, params, prefix, adj, dilation, mask, training)
        else:
            h = tcn_block(h, params, prefix, dilation, mask, training)
    if config.uses_graph:
        h = mean_pool_nodes(h)
    logits = pointwise_conv(h, params["stage0.conv_out.weight"], params["stage0.conv_out.bias"])
    return softmax_over_classes(logits)


def refinement_stage(
    p_prev: DiffArray,
    params: ModelParams,
    stage: int,
    mask: np.ndarray,
    training: bool = False,
) -> DiffArray:
    """
    Re-predict class probabilities [B, l, T] from the previous stage's softmax.

    Raises:
        DimensionError: If the class axis does not match the configuration
    """
    config = params.config
    if p_prev.ndim != 3 or p_prev.shape[1] != config.num_classes:
        raise DimensionError(
            f"refinement stage {stage} expects probabilities [batch, l={config.num_classes}, time], "
            f"got {p_prev.shape}"
        )
    prefix = f"stage{stage}"
    h = apply_mask(
        pointwise_conv(p_prev, params[f"{prefix}.conv_in.weight"], params[f"{prefix}.conv_in.bias"]),
        mask,
    )
    for i, dilation in enumerate(config.dilations):
        h = tcn_block(h, params, f"{prefix}.layer{i}", dilation, mask, training)
    logits = pointwise_conv(
        h, params[f"{prefix}.conv_out.weight"], params[f"{prefix}.conv_out.bias"]
    )
    return softmax_over_classes(logits)


def forward(
    features: Union[DiffArray, np.ndarray],
    params: ModelParams,
    adj: Optional[PartitionedAdjacency] = None,
    mask: Optional[np.ndarray] = None,
    training: bool = False,
) -> StageOutputs:
    """
    Run every stage of the configured variant.

    Args:
        features: Displacement features [B, C_in, N, T]
        params: Network parameters; ``params.config`` selects the variant
        adj: Partitioned adjacency (required by graph variants)
        mask: Validity mask [B, T]; all samples valid when omitted
        training: Use batch statistics and update the running ones

    Returns:
        One probability array per stage

    Raises:
        ConfigurationError: If the variant is unknown
        DimensionError: If inputs do not fit the configuration
    """
    config = params.config
    if config.uses_graph and adj is None:
        raise ConfigurationError(f"Variant '{config.variant}' requires a skeleton adjacency")
    if not isinstance(features, DiffArray):
        features = DiffArray(features, dtype=params.dtype)
    if mask is None:
        mask = np.ones((features.shape[0], features.shape[-1]), dtype=features.dtype)

    out = generation_stage(features, params, adj, mask, training)
    stages = [out]
    for stage in range(1, config.stage_count):
        out = refinement_stage(apply_mask(out, mask), params, stage, mask, training)
        stages.append(out)
    return StageOutputs(tuple(stages))

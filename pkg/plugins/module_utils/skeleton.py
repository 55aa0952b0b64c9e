# -*- coding: utf-8 -*-
"""
Marker graph, spatial partitioning and graph convolution.

The skeleton is an undirected graph over motion-capture markers. Its
neighborhoods are split into three partitions relative to a center node (the
node itself, neighbors at most as far from the center, neighbors farther away)
and each partition gets its own channel transform and learnable attention mask.
"""

from __future__ import absolute_import, division, print_function

import hashlib
import json
import logging
from collections import deque
from dataclasses import dataclass
from typing import Any, Dict, List, Mapping, Sequence, Tuple

import numpy as np

from ansible.module_utils._text import to_text

from .autodiff import DiffArray, channel_matmul, record_op
from .exceptions import ConfigurationError, DimensionError

__metaclass__ = type

DEFAULT_MARKERS = (
    "LASI",
    "RASI",
    "SACR",
    "LKNE",
    "LANK",
    "LTOE",
    "RKNE",
    "RANK",
    "RTOE",
)
DEFAULT_EDGES = (
    ("LASI", "RASI"),
    ("LASI", "SACR"),
    ("RASI", "SACR"),
    ("LASI", "LKNE"),
    ("LKNE", "LANK"),
    ("LANK", "LTOE"),
    ("RASI", "RKNE"),
    ("RKNE", "RANK"),
    ("RANK", "RTOE"),
)
DEFAULT_CENTER = "SACR"
NUM_PARTITIONS = 3
PARTITION_NAMES = ("root", "centripetal", "centrifugal")

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SkeletonGraph:
    """
    Undirected marker graph with a designated center node.

    Attributes:
        nodes: Marker names in feature order
        edges: Undirected marker-name pairs
        center: Marker used as the reference of the partitioning strategy
    """

    nodes: Tuple[str, ...]
    edges: Tuple[Tuple[str, str], ...]
    center: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "edges", tuple(tuple(edge) for edge in self.edges))
        if not self.nodes:
            raise ConfigurationError("Skeleton graph needs at least one node")
        if len(set(self.nodes)) != len(self.nodes):
            raise ConfigurationError(
                f"Skeleton graph node names must be unique: {list(self.nodes)}"
            )
        if self.center not in self.nodes:
            raise ConfigurationError(
                f"Center node '{self.center}' is not one of the graph nodes"
            )
        seen = set()
        for edge in self.edges:
            if len(edge) != 2:
                raise ConfigurationError(f"Edge {list(edge)} must name exactly two nodes")
            a, b = edge
            for name in edge:
                if name not in self.nodes:
                    raise ConfigurationError(f"Edge {a}-{b} references unknown node '{name}'")
            if a == b:
                raise ConfigurationError(f"Self-loop on node '{a}' is not allowed")
            key = frozenset(edge)
            if key in seen:
                raise ConfigurationError(f"Duplicate edge {a}-{b}")
            seen.add(key)

    @property
    def num_nodes(self) -> int:
        return len(self.nodes)

    def index(self, name: str) -> int:
        return self.nodes.index(name)

    def adjacency(self) -> np.ndarray:
        """Binary symmetric adjacency without self-loops."""
        adj = np.zeros((self.num_nodes, self.num_nodes), dtype=np.float64)
        for a, b in self.edges:
            i, j = self.index(a), self.index(b)
            adj[i, j] = adj[j, i] = 1.0
        return adj

    def degree(self, name: str) -> int:
        return int(self.adjacency()[self.index(name)].sum())

    def hop_distances(self) -> np.ndarray:
        """
        Breadth-first hop distance of every node from the center.

        Raises:
            ConfigurationError: If some node cannot be reached from the center
        """
        adj = self.adjacency()
        dist = np.full(self.num_nodes, -1, dtype=np.int64)
        start = self.index(self.center)
        dist[start] = 0
        queue = deque([start])
        while queue:
            i = queue.popleft()
            for j in np.flatnonzero(adj[i]):
                if dist[j] < 0:
                    dist[j] = dist[i] + 1
                    queue.append(j)
        unreachable = [self.nodes[i] for i in np.flatnonzero(dist < 0)]
        if unreachable:
            raise ConfigurationError(
                f"Skeleton graph is disconnected; unreachable from '{self.center}': "
                f"{', '.join(unreachable)}",
                unreachable=unreachable,
            )
        return dist

    def is_connected(self) -> bool:
        try:
            self.hop_distances()
        except ConfigurationError:
            return False
        return True

    def permuted(self, order: Sequence[int]) -> "SkeletonGraph":
        """Same graph with nodes listed in ``[nodes[k] for k in order]`` order."""
        if sorted(order) != list(range(self.num_nodes)):
            raise ConfigurationError(f"{list(order)} is not a permutation of the node indices")
        return SkeletonGraph(
            nodes=tuple(self.nodes[k] for k in order), edges=self.edges, center=self.center
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "nodes": list(self.nodes),
            "edges": [list(edge) for edge in self.edges],
            "center": self.center,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "SkeletonGraph":
        missing = [key for key in ("nodes", "edges", "center") if key not in data]
        if missing:
            raise ConfigurationError(f"Graph definition is missing: {', '.join(missing)}")
        return cls(
            nodes=tuple(data["nodes"]),
            edges=tuple(tuple(edge) for edge in data["edges"]),
            center=data["center"],
        )

    def graph_hash(self) -> str:
        """sha256 of the canonical JSON form; stored in checkpoints."""
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class PartitionedAdjacency:
    """
    Stack of binary partition matrices and their row-normalized forms.

    Attributes:
        a: Binary partitions [P, N, N]; they tile adjacency-with-self-loops
        normalized: D_p^-1 A_p per partition; zero-degree rows stay zero
    """

    a: np.ndarray
    normalized: np.ndarray

    @classmethod
    def from_stack(cls, stack: np.ndarray) -> "PartitionedAdjacency":
        stack = np.array(stack, dtype=np.float64)
        if stack.ndim != 3 or stack.shape[1] != stack.shape[2]:
            raise DimensionError(f"Partition stack must be [P, N, N], got {stack.shape}")
        normalized = np.stack([degree_normalize(a_p) for a_p in stack])
        stack.setflags(write=False)
        normalized.setflags(write=False)
        return cls(a=stack, normalized=normalized)

    @property
    def num_partitions(self) -> int:
        return self.a.shape[0]

    @property
    def num_nodes(self) -> int:
        return self.a.shape[1]


def build_default_graph() -> SkeletonGraph:
    """Nine-marker lower-limb graph: pelvis triangle plus knee-ankle-toe chains."""
    return SkeletonGraph(nodes=DEFAULT_MARKERS, edges=DEFAULT_EDGES, center=DEFAULT_CENTER)


def degree_normalize(a: np.ndarray) -> np.ndarray:
    degree = a.sum(axis=1, keepdims=True)
    return np.divide(a, degree, out=np.zeros_like(a), where=degree > 0)


def partition(graph: SkeletonGraph) -> PartitionedAdjacency:
    """
    Split adjacency-with-self-loops into root, centripetal and centrifugal partitions.

    Neighbors at equal hop distance from the center go to the centripetal partition.

    Args:
        graph: Connected skeleton graph

    Returns:
        The partitioned adjacency with P=3

    Raises:
        ConfigurationError: If the graph is disconnected
    """
    dist = graph.hop_distances()
    adj = graph.adjacency()
    n = graph.num_nodes
    stack = np.zeros((NUM_PARTITIONS, n, n), dtype=np.float64)
    stack[0] = np.eye(n)
    rows, cols = np.nonzero(adj)
    for i, j in zip(rows, cols):
        if dist[j] <= dist[i]:
            stack[1, i, j] = 1.0
        else:
            stack[2, i, j] = 1.0
    logger.debug(
        f"Partitioned graph of {n} nodes: "
        + ", ".join(f"{name}={int(stack[p].sum())}" for p, name in enumerate(PARTITION_NAMES))
    )
    return PartitionedAdjacency.from_stack(stack)


def attention_mask_init(adj: PartitionedAdjacency, dtype: type = np.float64) -> np.ndarray:
    """All-ones attention masks [P, N, N]."""
    return np.ones(adj.a.shape, dtype=dtype)


def graph_conv(
    f: DiffArray,
    adj: PartitionedAdjacency,
    masks: Sequence[DiffArray],
    weights: Sequence[DiffArray],
) -> DiffArray:
    """
    Partitioned graph convolution.

    out = sum_p W_p . mix_nodes(f, D_p^-1 A_p * M_p), where ``*`` is elementwise
    and ``.`` acts on the channel axis. Recorded as a single tape operation
    that retains only ``f``.

    Args:
        f: Per-node map [B, C, N, T]
        adj: Partitioned adjacency
        masks: One attention mask [N, N] per partition
        weights: One channel transform [C_out, C] per partition

    Returns:
        Per-node map [B, C_out, N, T]

    Raises:
        DimensionError: If partition counts or node counts disagree
    """
    p = adj.num_partitions
    if len(masks) != p or len(weights) != p:
        raise DimensionError(
            f"graph_conv: got {len(masks)} masks and {len(weights)} weights for {p} partitions"
        )
    if f.ndim != 4 or f.shape[2] != adj.num_nodes:
        raise DimensionError(
            f"graph_conv: input node axis 2 of {f.shape} does not match adjacency N={adj.num_nodes}"
        )
    n = adj.num_nodes
    for part in range(p):
        if masks[part].shape != (n, n):
            raise DimensionError(
                f"graph_conv: attention mask {part} has shape {masks[part].shape}, expected [{n}, {n}]"
            )
        if weights[part].ndim != 2 or weights[part].shape[1] != f.shape[1]:
            raise DimensionError(
                f"graph_conv: weight {part} axis 1 ({weights[part].shape}) does not match "
                f"input channel axis 1 (C={f.shape[1]})"
            )

    fv = f.values
    norm = adj.normalized.astype(fv.dtype)
    mixing = [masks[part].values * norm[part] for part in range(p)]
    out = channel_matmul(weights[0].values, np.matmul(mixing[0], fv))
    for part in range(1, p):
        out += channel_matmul(weights[part].values, np.matmul(mixing[part], fv))

    def backward_fn(g: np.ndarray) -> List[np.ndarray]:
        grad_f = np.zeros_like(fv)
        grad_masks, grad_weights = [], []
        for part in range(p):
            wv = weights[part].values
            mixed = np.matmul(mixing[part], fv)
            grad_weights.append(np.tensordot(g, mixed, axes=([0, 2, 3], [0, 2, 3])))
            del mixed
            grad_mixed = channel_matmul(wv.T, g)
            grad_f += np.matmul(mixing[part].T, grad_mixed)
            grad_mix = np.tensordot(grad_mixed, fv, axes=([0, 1, 3], [0, 1, 3]))
            grad_masks.append(grad_mix * norm[part])
        return [grad_f] + grad_masks + grad_weights

    return record_op(out, [f] + list(masks) + list(weights), backward_fn)


def load_graph(path: str) -> SkeletonGraph:
    """
    Read a graph JSON file with ``nodes``, ``edges`` and ``center``.

    Raises:
        ConfigurationError: If the file is unreadable or describes an invalid graph
    """
    try:
        with open(path, "r", encoding="utf-8") as handle:
            data = json.load(handle)
    except (OSError, ValueError) as e:
        raise ConfigurationError(f"Unable to read graph file {path}: {to_text(e)}", path=path)
    if not isinstance(data, dict):
        raise ConfigurationError(f"Graph file {path} must contain a JSON object", path=path)
    graph = SkeletonGraph.from_dict(data)
    graph.hop_distances()
    logger.info(f"Loaded graph with {graph.num_nodes} nodes from {path}")
    return graph


def save_graph(graph: SkeletonGraph, path: str) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(graph.to_dict(), handle, indent=2, sort_keys=True)
        handle.write("\n")

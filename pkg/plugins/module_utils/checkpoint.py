# -*- coding: utf-8 -*-
"""
Checkpoint container for trained networks.

Layout::

    b"MSGCNCKP"                  8-byte magic
    uint64 little-endian         header length in bytes
    header                       UTF-8 JSON, sorted keys, compact separators
    array bytes                  little-endian, in header table order

The header carries the format version, the model configuration, the skeleton
graph, its hash and a table of ``{name, dtype, shape, offset, nbytes}`` entries.
Nothing time-dependent is stored, so identical parameters give identical files.
"""

from __future__ import absolute_import, division, print_function

import json
import logging
import struct
from dataclasses import dataclass, field
from typing import Any, Dict, Mapping, Optional

import numpy as np

try:
    from packaging import version

    HAS_PACKAGING = True
except ImportError:
    HAS_PACKAGING = False

from ansible.module_utils._text import to_text

from .config import ModelConfig
from .exceptions import CheckpointFormatError, ConfigurationError
from .model import ModelParams, count_params
from .skeleton import SkeletonGraph

__metaclass__ = type

MAGIC = b"MSGCNCKP"
FORMAT_VERSION = "1.0"
SUPPORTED_FORMAT_MIN = "1.0"
SUPPORTED_FORMAT_MAX = "2.0"
_LENGTH = struct.Struct("<Q")

logger = logging.getLogger(__name__)


@dataclass
class Checkpoint:
    """A loaded checkpoint."""

    params: ModelParams
    graph: Optional[SkeletonGraph]
    graph_hash: Optional[str]
    format_version: str
    metadata: Dict[str, Any] = field(default_factory=dict)


def check_format_version(found: str) -> None:
    """
    Verify a checkpoint or report format version is readable.

    Raises:
        CheckpointFormatError: If the version is outside [MIN, MAX) or unparsable
    """
    if not HAS_PACKAGING:
        logger.warning("packaging library not available, skipping format version check")
        return
    try:
        parsed = version.parse(str(found))
    except Exception as e:
        raise CheckpointFormatError(f"Unable to parse format version '{found}': {to_text(e)}")
    if parsed < version.parse(SUPPORTED_FORMAT_MIN) or parsed >= version.parse(
        SUPPORTED_FORMAT_MAX
    ):
        raise CheckpointFormatError(
            f"Format version {found} is not supported; expected >= {SUPPORTED_FORMAT_MIN} "
            f"and < {SUPPORTED_FORMAT_MAX}",
            format_version=str(found),
        )


def checkpoint_bytes(
    params: ModelParams,
    graph: Optional[SkeletonGraph] = None,
    metadata: Optional[Mapping[str, Any]] = None,
) -> bytes:
    """Serialize parameters, buffers, configuration and graph into one blob."""
    table = []
    chunks = []
    offset = 0
    for name, array in params.state_dict().items():
        le = np.ascontiguousarray(array, dtype=array.dtype.newbyteorder("<"))
        raw = le.tobytes()
        table.append(
            {
                "name": name,
                "dtype": le.dtype.str,
                "shape": list(le.shape),
                "offset": offset,
                "nbytes": len(raw),
            }
        )
        chunks.append(raw)
        offset += len(raw)
    header = {
        "format_version": FORMAT_VERSION,
        "config": params.config.to_dict(),
        "num_nodes": params.num_nodes,
        "param_count": params.count(),
        "graph": graph.to_dict() if graph is not None else None,
        "graph_hash": graph.graph_hash() if graph is not None else None,
        "metadata": dict(metadata or {}),
        "arrays": table,
    }
    encoded = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return b"".join([MAGIC, _LENGTH.pack(len(encoded)), encoded] + chunks)


def save_checkpoint(
    path: str,
    params: ModelParams,
    graph: Optional[SkeletonGraph] = None,
    metadata: Optional[Mapping[str, Any]] = None,
) -> str:
    """
    Write a checkpoint file.

    Returns:
        The path written
    """
    blob = checkpoint_bytes(params, graph, metadata)
    with open(path, "wb") as handle:
        handle.write(blob)
    logger.info(f"Checkpoint with {params.count()} parameters written to {path}")
    return path


def _split(blob: bytes, source: str):
    if len(blob) < len(MAGIC) + _LENGTH.size or not blob.startswith(MAGIC):
        raise CheckpointFormatError(f"{source} is not a checkpoint (bad magic)", path=source)
    (length,) = _LENGTH.unpack_from(blob, len(MAGIC))
    start = len(MAGIC) + _LENGTH.size
    if len(blob) < start + length:
        raise CheckpointFormatError(f"{source} is truncated inside its header", path=source)
    try:
        header = json.loads(blob[start : start + length].decode("utf-8"))
    except ValueError as e:
        raise CheckpointFormatError(f"{source} has an unreadable header: {to_text(e)}", path=source)
    check_format_version(header.get("format_version", "0"))
    return header, blob[start + length :]


def _read_blob(path: str) -> bytes:
    try:
        with open(path, "rb") as handle:
            return handle.read()
    except OSError as e:
        raise CheckpointFormatError(f"Unable to read checkpoint {path}: {to_text(e)}", path=path)


def read_header(path: str) -> Dict[str, Any]:
    """Return the decoded JSON header of a checkpoint file."""
    header, _ = _split(_read_blob(path), path)
    return header


def parse_checkpoint(
    blob: bytes, source: str = "<bytes>", expected_graph: Optional[SkeletonGraph] = None
) -> Checkpoint:
    """
    Decode a checkpoint blob.

    Args:
        blob: Checkpoint bytes
        source: Name used in error messages
        expected_graph: Graph the caller intends to use; its hash must match

    Returns:
        The decoded checkpoint

    Raises:
        CheckpointFormatError: For malformed or truncated data
        ConfigurationError: If the stored graph or parameter count disagrees
    """
    header, payload = _split(blob, source)
    config = ModelConfig(**header["config"])
    state = {}
    for entry in header["arrays"]:
        end = entry["offset"] + entry["nbytes"]
        if end > len(payload):
            raise CheckpointFormatError(
                f"{source} is truncated inside array {entry['name']}", path=source
            )
        dtype = np.dtype(entry["dtype"])
        array = np.frombuffer(
            payload, dtype=dtype, count=entry["nbytes"] // dtype.itemsize, offset=entry["offset"]
        )
        state[entry["name"]] = array.reshape(entry["shape"]).astype(dtype.newbyteorder("="))
    params = ModelParams.from_state(config, header["num_nodes"], state)

    expected_count = count_params(config, header["num_nodes"])
    if header.get("param_count") != expected_count:
        raise ConfigurationError(
            f"{source} declares {header.get('param_count')} parameters but its configuration "
            f"has {expected_count}"
        )
    graph = SkeletonGraph.from_dict(header["graph"]) if header.get("graph") else None
    if graph is not None and graph.graph_hash() != header.get("graph_hash"):
        raise CheckpointFormatError(f"{source} graph hash does not match its stored graph")
    if expected_graph is not None and header.get("graph_hash") not in (
        None,
        expected_graph.graph_hash(),
    ):
        raise ConfigurationError(
            f"{source} was trained on a different skeleton graph "
            f"(hash {header.get('graph_hash')[:12]} vs {expected_graph.graph_hash()[:12]})"
        )
    return Checkpoint(
        params=params,
        graph=graph,
        graph_hash=header.get("graph_hash"),
        format_version=header["format_version"],
        metadata=header.get("metadata") or {},
    )


def load_checkpoint(path: str, expected_graph: Optional[SkeletonGraph] = None) -> Checkpoint:
    checkpoint = parse_checkpoint(_read_blob(path), path, expected_graph)
    logger.info(f"Loaded {checkpoint.params.config.variant} checkpoint from {path}")
    return checkpoint

#!/usr/bin/env python3
"""
Unit tests for the checkpoint container.
"""

import json
import os
import tempfile
import unittest
from unittest.mock import patch

import numpy as np

try:
    from ansible_collections.gaitlab.msgcn.plugins.module_utils import checkpoint
    from ansible_collections.gaitlab.msgcn.plugins.module_utils.config import ModelConfig
    from ansible_collections.gaitlab.msgcn.plugins.module_utils.exceptions import (
        CheckpointFormatError,
        ConfigurationError,
    )
    from ansible_collections.gaitlab.msgcn.plugins.module_utils.model import ModelParams, forward
    from ansible_collections.gaitlab.msgcn.plugins.module_utils.skeleton import (
        build_default_graph,
        partition,
    )

    CHECKPOINT_MODULE_PATH = "ansible_collections.gaitlab.msgcn.plugins.module_utils.checkpoint"
except ImportError:
    from plugins.module_utils import checkpoint
    from plugins.module_utils.config import ModelConfig
    from plugins.module_utils.exceptions import CheckpointFormatError, ConfigurationError
    from plugins.module_utils.model import ModelParams, forward
    from plugins.module_utils.skeleton import build_default_graph, partition

    CHECKPOINT_MODULE_PATH = "plugins.module_utils.checkpoint"

CONFIG = ModelConfig(num_stages=2, layers_per_stage=2, channels=4)


def rewrite_header(blob, **changes):
    length = checkpoint._LENGTH.unpack_from(blob, len(checkpoint.MAGIC))[0]
    start = len(checkpoint.MAGIC) + checkpoint._LENGTH.size
    header = json.loads(blob[start : start + length])
    header.update(changes)
    encoded = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return checkpoint.MAGIC + checkpoint._LENGTH.pack(len(encoded)) + encoded + blob[start + length :]


class TestCheckpoint(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.path = os.path.join(self.tmp.name, "model.msgcn")
        self.graph = build_default_graph()
        self.params = ModelParams.initialize(CONFIG, 9, np.random.default_rng(4))
        self.params.buffers["stage0.input_bn.running_mean"][:] = [0.5, -1.0, 2.0]

    def tearDown(self):
        self.tmp.cleanup()

    def test_round_trip_is_bit_exact(self):
        checkpoint.save_checkpoint(self.path, self.params, self.graph, {"epochs": 3})
        loaded = checkpoint.load_checkpoint(self.path, self.graph)
        self.assertEqual(loaded.format_version, checkpoint.FORMAT_VERSION)
        self.assertEqual(loaded.metadata, {"epochs": 3})
        self.assertEqual(loaded.graph, self.graph)
        for name, values in self.params.state_dict().items():
            np.testing.assert_array_equal(loaded.params.state_dict()[name], values)

        features = np.random.default_rng(0).normal(size=(1, 3, 9, 20))
        adj = partition(self.graph)
        before = forward(features, self.params, adj).probabilities()
        after = forward(features, loaded.params, adj).probabilities()
        np.testing.assert_array_equal(before, after)

    def test_identical_parameters_give_identical_bytes(self):
        copy = ModelParams.initialize(CONFIG, 9, np.random.default_rng(4))
        copy.buffers["stage0.input_bn.running_mean"][:] = [0.5, -1.0, 2.0]
        self.assertEqual(
            checkpoint.checkpoint_bytes(self.params, self.graph),
            checkpoint.checkpoint_bytes(copy, self.graph),
        )

    def test_float32_round_trip(self):
        params = ModelParams.initialize(CONFIG, 9, dtype=np.float32)
        loaded = checkpoint.parse_checkpoint(checkpoint.checkpoint_bytes(params))
        self.assertEqual(loaded.params.dtype, np.float32)

    def test_header(self):
        checkpoint.save_checkpoint(self.path, self.params, self.graph)
        header = checkpoint.read_header(self.path)
        self.assertEqual(header["param_count"], self.params.count())
        self.assertEqual(header["graph_hash"], self.graph.graph_hash())
        self.assertEqual(header["config"]["variant"], "ms-gcn")

    def test_bad_magic(self):
        with self.assertRaises(CheckpointFormatError):
            checkpoint.parse_checkpoint(b"NOTACKPT" + b"\x00" * 16)

    def test_truncated(self):
        blob = checkpoint.checkpoint_bytes(self.params, self.graph)
        with self.assertRaises(CheckpointFormatError):
            checkpoint.parse_checkpoint(blob[:-10])
        with self.assertRaises(CheckpointFormatError):
            checkpoint.parse_checkpoint(blob[:20])

    def test_unsupported_version(self):
        blob = rewrite_header(checkpoint.checkpoint_bytes(self.params), format_version="2.1")
        with self.assertRaises(CheckpointFormatError) as ctx:
            checkpoint.parse_checkpoint(blob)
        self.assertEqual(ctx.exception.kwargs["format_version"], "2.1")

    def test_minor_version_is_accepted(self):
        blob = rewrite_header(checkpoint.checkpoint_bytes(self.params), format_version="1.3")
        self.assertEqual(checkpoint.parse_checkpoint(blob).format_version, "1.3")

    def test_version_check_skipped_without_packaging(self):
        with patch(f"{CHECKPOINT_MODULE_PATH}.HAS_PACKAGING", False):
            checkpoint.check_format_version("9.0")

    def test_param_count_mismatch(self):
        blob = rewrite_header(checkpoint.checkpoint_bytes(self.params), param_count=1)
        with self.assertRaises(ConfigurationError):
            checkpoint.parse_checkpoint(blob)

    def test_graph_mismatch(self):
        blob = checkpoint.checkpoint_bytes(self.params, self.graph)
        other = self.graph.permuted([1, 0, 2, 3, 4, 5, 6, 7, 8])
        with self.assertRaises(ConfigurationError):
            checkpoint.parse_checkpoint(blob, expected_graph=other)

    def test_missing_file(self):
        with self.assertRaises(CheckpointFormatError):
            checkpoint.load_checkpoint(os.path.join(self.tmp.name, "absent.msgcn"))


if __name__ == "__main__":
    unittest.main()

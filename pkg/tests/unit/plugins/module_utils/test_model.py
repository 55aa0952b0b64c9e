#!/usr/bin/env python3
"""
Unit tests for the MS-GCN network and its ablation variants.
"""

import unittest
from unittest.mock import patch

import numpy as np

try:
    from ansible_collections.gaitlab.msgcn.plugins.module_utils import model
    from ansible_collections.gaitlab.msgcn.plugins.module_utils.autodiff import Tape
    from ansible_collections.gaitlab.msgcn.plugins.module_utils.config import LossConfig, ModelConfig
    from ansible_collections.gaitlab.msgcn.plugins.module_utils.exceptions import (
        ConfigurationError,
        DimensionError,
    )
    from ansible_collections.gaitlab.msgcn.plugins.module_utils.loss import total_loss
    from ansible_collections.gaitlab.msgcn.plugins.module_utils.skeleton import (
        SkeletonGraph,
        build_default_graph,
        partition,
    )

    MODEL_MODULE_PATH = "ansible_collections.gaitlab.msgcn.plugins.module_utils.model"
except ImportError:
    from plugins.module_utils import model
    from plugins.module_utils.autodiff import Tape
    from plugins.module_utils.config import LossConfig, ModelConfig
    from plugins.module_utils.exceptions import ConfigurationError, DimensionError
    from plugins.module_utils.loss import total_loss
    from plugins.module_utils.skeleton import SkeletonGraph, build_default_graph, partition

    MODEL_MODULE_PATH = "plugins.module_utils.model"

from .test_autodiff import numerical_grad

TINY = dict(num_stages=2, layers_per_stage=2, channels=4)


def tiny_graph():
    return SkeletonGraph(
        nodes=("A", "B", "C", "D"), edges=(("A", "B"), ("B", "C"), ("B", "D")), center="B"
    )


class TestParameterCounts(unittest.TestCase):
    def test_default_ms_gcn(self):
        self.assertEqual(model.count_params(ModelConfig()), 752270)

    def test_variants(self):
        self.assertEqual(model.count_params(ModelConfig(variant="st-gcn")), 251782)
        # single-stage TCN sees 27 flattened input channels
        tcn = model.count_params(ModelConfig(variant="tcn"))
        self.assertEqual(tcn, 54 + (27 * 64 + 64) + 10 * (12352 + 128) + 130)
        ms_tcn = model.count_params(ModelConfig(variant="ms-tcn"))
        self.assertEqual(ms_tcn, tcn + 4 * 125122)

    def test_initialized_collection_matches_count(self):
        config = ModelConfig(**TINY)
        params = model.ModelParams.initialize(config, num_nodes=4)
        self.assertEqual(params.count(), model.count_params(config, 4))

    def test_receptive_field(self):
        self.assertEqual(ModelConfig().receptive_field, 2047)
        self.assertEqual(ModelConfig().dilations[-1], 512)

    def test_single_stage_variants_force_one_stage(self):
        self.assertEqual(ModelConfig(variant="st-gcn", num_stages=5).stage_count, 1)
        self.assertEqual(ModelConfig(variant="ms-tcn", num_stages=3).stage_count, 3)

    def test_invalid_configs(self):
        with self.assertRaises(ConfigurationError):
            ModelConfig(variant="gru")
        with self.assertRaises(ConfigurationError):
            ModelConfig(kernel_size=4)
        with self.assertRaises(ConfigurationError):
            ModelConfig(num_stages=0)


class TestInitialization(unittest.TestCase):
    def test_same_seed_same_parameters(self):
        config = ModelConfig(**TINY)
        a = model.ModelParams.initialize(config, 4, np.random.default_rng(5))
        b = model.ModelParams.initialize(config, 4, np.random.default_rng(5))
        for name, array in a.items():
            np.testing.assert_array_equal(array.values, b[name].values)

    def test_init_ranges(self):
        config = ModelConfig(**TINY)
        params = model.ModelParams.initialize(config, 4)
        weight = params["stage0.layer0.tcn.weight"].values
        self.assertLessEqual(np.abs(weight).max(), np.sqrt(6.0 / (4 * 3)))
        np.testing.assert_array_equal(params["stage0.layer0.gcn.mask.0"].values, np.ones((4, 4)))
        np.testing.assert_array_equal(params["stage1.conv_out.bias"].values, np.zeros(2))
        np.testing.assert_array_equal(params.buffers["stage0.input_bn.running_var"], np.ones(3))

    def test_float32(self):
        params = model.ModelParams.initialize(ModelConfig(**TINY), 4, dtype=np.float32)
        self.assertEqual(params.dtype, np.float32)

    def test_from_state_rejects_mismatch(self):
        config = ModelConfig(**TINY)
        state = dict(model.ModelParams.initialize(config, 4).state_dict())
        state.pop("stage1.conv_in.bias")
        with self.assertRaises(ConfigurationError):
            model.ModelParams.from_state(config, 4, state)

    def test_unknown_parameter(self):
        params = model.ModelParams.initialize(ModelConfig(**TINY), 4)
        with self.assertRaises(ConfigurationError):
            params["stage9.conv_in.weight"]


class TestForward(unittest.TestCase):
    def setUp(self):
        self.graph = tiny_graph()
        self.adj = partition(self.graph)
        self.rng = np.random.default_rng(11)
        self.features = self.rng.normal(size=(2, 3, 4, 12))

    def params(self, **overrides):
        config = ModelConfig(**dict(TINY, **overrides))
        return model.ModelParams.initialize(config, 4, np.random.default_rng(0))

    def test_every_variant_yields_distributions(self):
        for variant, stages in (("ms-gcn", 2), ("st-gcn", 1), ("ms-tcn", 2), ("tcn", 1)):
            with self.subTest(variant=variant):
                params = self.params(variant=variant)
                out = model.forward(self.features, params, self.adj)
                self.assertEqual(len(out), stages)
                self.assertEqual(out.final.shape, (2, 2, 12))
                np.testing.assert_allclose(out.probabilities().sum(axis=1), np.ones((2, 12)))
                self.assertEqual(out.predictions().shape, (2, 12))

    def test_graph_variant_needs_adjacency(self):
        with self.assertRaises(ConfigurationError):
            model.forward(self.features, self.params(), None)

    def test_node_count_mismatch(self):
        adj = partition(build_default_graph())
        with self.assertRaises(DimensionError):
            model.forward(self.features, self.params(), adj)

    def test_channel_mismatch(self):
        with self.assertRaises(DimensionError):
            model.forward(self.features[:, :2], self.params(), self.adj)

    def test_padding_does_not_change_valid_samples(self):
        params = self.params()
        single = self.features[:1, :, :, :8]
        padded = np.zeros((1, 3, 4, 12))
        padded[..., :8] = single
        mask = np.zeros((1, 12))
        mask[0, :8] = 1.0
        short = model.forward(single, params, self.adj)
        long = model.forward(padded, params, self.adj, mask=mask)
        for stage in range(2):
            np.testing.assert_allclose(
                long.probabilities(stage)[..., :8], short.probabilities(stage), atol=1e-10
            )

    def test_eval_mode_leaves_running_statistics(self):
        params = self.params()
        before = {k: v.copy() for k, v in params.buffers.items()}
        model.forward(self.features, params, self.adj)
        for name, values in before.items():
            np.testing.assert_array_equal(params.buffers[name], values)
        model.forward(self.features, params, self.adj, training=True)
        self.assertFalse(
            np.array_equal(params.buffers["stage0.input_bn.running_mean"], before["stage0.input_bn.running_mean"])
        )

    def test_argmax_ties_go_to_fg(self):
        outputs = model.StageOutputs((model.DiffArray(np.full((1, 2, 3), 0.5)),))
        np.testing.assert_array_equal(outputs.predictions(), [[model.FG] * 3])

    def test_classification_gradients_match_finite_differences(self):
        # the smoothing term detaches the previous sample, so central differences only
        # agree with the tape on the classification term
        params = self.params()
        labels = (self.rng.uniform(size=(2, 12)) > 0.5).astype(int)
        mask = np.ones((2, 12))
        cfg = LossConfig(smoothing_weight=0.0)

        def loss_value():
            return total_loss(
                model.forward(self.features, params, self.adj, mask, training=True), labels, mask, cfg
            ).item()

        params.zero_grad()
        with Tape() as tape:
            loss = total_loss(model.forward(self.features, params, self.adj, mask, training=True), labels, mask, cfg)
        tape.backward(loss)
        for name in ("stage0.layer1.gcn.mask.1", "stage0.input_bn.gamma", "stage1.conv_in.weight"):
            with self.subTest(parameter=name):
                leaf = params[name]
                expected = numerical_grad(loss_value, leaf)
                np.testing.assert_allclose(leaf.grad, expected, rtol=1e-4, atol=1e-7)


class TestReceptiveField(unittest.TestCase):
    """An input impulse reaches exactly receptive_field logits of the first stage."""

    STEPS = 2101
    IMPULSE = 1050

    def changed_samples(self, config, impulse=IMPULSE):
        graph = build_default_graph()
        params = model.ModelParams.initialize(config, graph.num_nodes, np.random.default_rng(4))
        adj = partition(graph)
        base = np.random.default_rng(5).normal(size=(1, 3, graph.num_nodes, self.STEPS))
        kicked = base.copy()
        kicked[..., impulse] += 1.0
        # the stage softmax saturates at this depth; compare the logits it is fed
        with patch(f"{MODEL_MODULE_PATH}.softmax_over_classes", side_effect=lambda logits: logits):
            a = model.forward(base, params, adj).probabilities(0)
            b = model.forward(kicked, params, adj).probabilities(0)
        return np.flatnonzero(np.any(a[0] != b[0], axis=0))

    def test_default_acausal_stage(self):
        changed = self.changed_samples(ModelConfig(num_stages=1))
        self.assertEqual(changed.size, 2047)
        self.assertEqual((changed[0], changed[-1]), (self.IMPULSE - 1023, self.IMPULSE + 1023))

    def test_causal_stage_never_looks_ahead(self):
        changed = self.changed_samples(ModelConfig(num_stages=1, acausal=False), impulse=20)
        self.assertEqual(changed.size, 2047)
        self.assertEqual((changed[0], changed[-1]), (20, 20 + 2046))

    def test_stacked_dilations_span_receptive_field(self):
        h = model.DiffArray(np.zeros((1, 1, 3001)))
        h.values[0, 0, 1500] = 1.0
        ones = model.DiffArray(np.ones((1, 1, 3)))
        for dilation in ModelConfig().dilations:
            h = model.dilated_conv1d(h, ones, None, dilation)
        support = np.flatnonzero(h.values[0, 0])
        self.assertEqual(support.size, 2047)
        self.assertEqual((support[0], support[-1]), (1500 - 1023, 1500 + 1023))

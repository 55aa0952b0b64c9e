#!/usr/bin/env python3
"""
Unit tests for the multi-stage training objective.
"""

import math
import unittest

import numpy as np

try:
    from ansible_collections.gaitlab.msgcn.plugins.module_utils import loss
    from ansible_collections.gaitlab.msgcn.plugins.module_utils.autodiff import DiffArray, Tape
    from ansible_collections.gaitlab.msgcn.plugins.module_utils.config import LossConfig
    from ansible_collections.gaitlab.msgcn.plugins.module_utils.exceptions import (
        DimensionError,
        MsgcnValidationError,
    )
except ImportError:
    from plugins.module_utils import loss
    from plugins.module_utils.autodiff import DiffArray, Tape
    from plugins.module_utils.config import LossConfig
    from plugins.module_utils.exceptions import DimensionError, MsgcnValidationError


def probs_from_fog(fog):
    """[B, T] FOG probabilities to a [B, 2, T] distribution."""
    fog = np.asarray(fog, dtype=float)
    return DiffArray(np.stack([1.0 - fog, fog], axis=1), track=True)


class TestCrossEntropy(unittest.TestCase):
    def test_uniform_prediction(self):
        probs = probs_from_fog(np.full((2, 5), 0.5))
        labels = np.zeros((2, 5), dtype=int)
        value = loss.cross_entropy(probs, labels, np.ones((2, 5))).item()
        self.assertAlmostEqual(value, math.log(2.0))

    def test_zero_probability_is_floored(self):
        probs = probs_from_fog([[0.0, 0.0]])
        value = loss.cross_entropy(probs, np.array([[1, 1]]), np.ones((1, 2))).item()
        self.assertAlmostEqual(value, -math.log(1e-12))

    def test_trials_weigh_equally(self):
        fog = np.array([[0.5, 0.5, 0.5, 0.5], [0.9, 0.9, 0.0, 0.0]])
        mask = np.array([[1, 1, 1, 1], [1, 1, 0, 0]])
        labels = np.ones((2, 4), dtype=int)
        value = loss.cross_entropy(probs_from_fog(fog), labels, mask).item()
        self.assertAlmostEqual(value, (math.log(2.0) - math.log(0.9)) / 2.0)

    def test_masked_labels_are_ignored(self):
        probs = probs_from_fog([[0.5, 0.5]])
        value = loss.cross_entropy(probs, np.array([[0, 7]]), np.array([[1, 0]])).item()
        self.assertAlmostEqual(value, math.log(2.0))

    def test_empty_trial(self):
        with self.assertRaises(MsgcnValidationError):
            loss.cross_entropy(probs_from_fog([[0.5]]), np.zeros((1, 1), dtype=int), np.zeros((1, 1)))

    def test_label_out_of_range(self):
        with self.assertRaises(MsgcnValidationError):
            loss.cross_entropy(probs_from_fog([[0.5]]), np.array([[2]]), np.ones((1, 1)))

    def test_shape_mismatch(self):
        with self.assertRaises(DimensionError):
            loss.cross_entropy(probs_from_fog([[0.5, 0.5]]), np.zeros((1, 3), dtype=int), np.ones((1, 2)))


class TestSmoothing(unittest.TestCase):
    def setUp(self):
        self.probs = probs_from_fog([[0.5, 0.1]])
        self.mask = np.ones((1, 2))

    def test_constant_prediction_is_free(self):
        value = loss.truncated_smoothing_loss(probs_from_fog(np.full((1, 6), 0.3)), np.ones((1, 6)), 4.0)
        self.assertEqual(value.item(), 0.0)

    def test_value(self):
        expected = (math.log(0.9 / 0.5) ** 2 + math.log(0.1 / 0.5) ** 2) / 4.0
        self.assertAlmostEqual(loss.truncated_smoothing_loss(self.probs, self.mask, 4.0).item(), expected)

    def test_truncation(self):
        expected = (math.log(0.9 / 0.5) ** 2 + 1.0) / 4.0
        self.assertAlmostEqual(loss.truncated_smoothing_loss(self.probs, self.mask, 1.0).item(), expected)

    def test_gradient_reaches_later_sample_only(self):
        with Tape() as tape:
            value = loss.truncated_smoothing_loss(self.probs, self.mask, 4.0)
        tape.backward(value)
        np.testing.assert_array_equal(self.probs.grad[0, :, 0], [0.0, 0.0])
        self.assertNotEqual(self.probs.grad[0, 1, 1], 0.0)

    def test_gradient_holds_previous_sample_constant(self):
        fog = np.random.default_rng(3).uniform(0.2, 0.8, size=(2, 6))
        for tau in (4.0, 0.5):
            with self.subTest(tau=tau):
                probs = probs_from_fog(fog)
                with Tape() as tape:
                    value = loss.truncated_smoothing_loss(probs, np.ones((2, 6)), tau)
                tape.backward(value)
                p = probs.values
                diffs = np.log(p[..., 1:]) - np.log(p[..., :-1])
                weight = 1.0 / (6 * 2 * 2)
                expected = np.zeros_like(p)
                expected[..., 1:] = np.where(np.abs(diffs) < tau, 2.0 * weight * diffs / p[..., 1:], 0.0)
                np.testing.assert_allclose(probs.grad, expected, rtol=1e-10, atol=1e-14)

    def test_pairs_touching_padding_are_excluded(self):
        probs = probs_from_fog([[0.5, 0.5, 0.99]])
        value = loss.truncated_smoothing_loss(probs, np.array([[1, 1, 0]]), 4.0)
        self.assertEqual(value.item(), 0.0)

    def test_single_step(self):
        with self.assertRaises(DimensionError):
            loss.truncated_smoothing_loss(probs_from_fog([[0.5]]), np.ones((1, 1)), 4.0)


class TestTotalLoss(unittest.TestCase):
    def test_sums_stages(self):
        stages = [probs_from_fog([[0.5, 0.5]]), probs_from_fog([[0.5, 0.1]])]
        labels = np.array([[0, 1]])
        mask = np.ones((1, 2))
        cfg = LossConfig(smoothing_weight=0.15, tau=4.0)
        terms = loss.stage_loss_terms(stages, labels, mask, cfg)
        self.assertEqual(len(terms), 2)
        self.assertAlmostEqual(terms[0].item(), math.log(2.0))
        smooth = (math.log(0.9 / 0.5) ** 2 + math.log(0.1 / 0.5) ** 2) / 4.0
        ce = -(math.log(0.5) + math.log(0.1)) / 2.0
        self.assertAlmostEqual(terms[1].item(), ce + 0.15 * smooth)
        total = loss.total_loss(stages, labels, mask, cfg).item()
        self.assertAlmostEqual(total, terms[0].item() + terms[1].item())

    def test_no_stages(self):
        with self.assertRaises(MsgcnValidationError):
            loss.total_loss([], np.zeros((1, 2)), np.ones((1, 2)), LossConfig())


if __name__ == "__main__":
    unittest.main()

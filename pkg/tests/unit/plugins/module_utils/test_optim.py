#!/usr/bin/env python3
"""
Unit tests for the Adam optimizer.
"""

import unittest

import numpy as np

try:
    from ansible_collections.gaitlab.msgcn.plugins.module_utils.autodiff import DiffArray
    from ansible_collections.gaitlab.msgcn.plugins.module_utils.config import TrainConfig
    from ansible_collections.gaitlab.msgcn.plugins.module_utils.exceptions import (
        NonFiniteGradientError,
    )
    from ansible_collections.gaitlab.msgcn.plugins.module_utils.optim import AdamState, adam_step
except ImportError:
    from plugins.module_utils.autodiff import DiffArray
    from plugins.module_utils.config import TrainConfig
    from plugins.module_utils.exceptions import NonFiniteGradientError
    from plugins.module_utils.optim import AdamState, adam_step


class Params:
    """Minimal parameter collection exposing ``items()``."""

    def __init__(self, **arrays):
        self.arrays = {name: DiffArray(values, track=True) for name, values in arrays.items()}

    def items(self):
        return iter(self.arrays.items())


class TestAdam(unittest.TestCase):
    def test_first_step_moves_by_learning_rate(self):
        params = Params(w=np.zeros(3))
        params.arrays["w"].grad[:] = [2.0, -3.0, 0.0]
        state = AdamState(lr=0.01)
        adam_step(params, state)
        np.testing.assert_allclose(params.arrays["w"].values, [-0.01, 0.01, 0.0], atol=1e-9)
        self.assertEqual(state.step, 1)

    def test_explicit_gradients(self):
        params = Params(w=np.ones(2))
        state = AdamState(lr=0.1)
        adam_step(params, state, {"w": np.array([1.0, 1.0])})
        np.testing.assert_allclose(params.arrays["w"].values, [0.9, 0.9], atol=1e-7)

    def test_minimizes_quadratic(self):
        params = Params(w=np.array([3.0, -2.0]))
        state = AdamState(lr=0.05)
        for _ in range(500):
            w = params.arrays["w"]
            adam_step(params, state, {"w": 2.0 * w.values})
        np.testing.assert_allclose(params.arrays["w"].values, [0.0, 0.0], atol=0.1)

    def test_non_finite_gradient_leaves_everything_untouched(self):
        params = Params(a=np.ones(2), b=np.ones(2))
        state = AdamState()
        adam_step(params, state, {"a": np.ones(2), "b": np.ones(2)})
        snapshot = {k: v.values.copy() for k, v in params.items()}
        moments = {k: v.copy() for k, v in state.m.items()}
        with self.assertRaises(NonFiniteGradientError) as ctx:
            adam_step(params, state, {"a": np.ones(2), "b": np.array([1.0, np.nan])})
        self.assertEqual(ctx.exception.kwargs["parameter"], "b")
        self.assertEqual(state.step, 1)
        for name, values in snapshot.items():
            np.testing.assert_array_equal(params.arrays[name].values, values)
            np.testing.assert_array_equal(state.m[name], moments[name])

    def test_from_config(self):
        state = AdamState.from_config(TrainConfig(learning_rate=0.001, beta1=0.8))
        self.assertEqual(state.lr, 0.001)
        self.assertEqual(state.beta1, 0.8)
        self.assertEqual(state.beta2, 0.999)


if __name__ == "__main__":
    unittest.main()

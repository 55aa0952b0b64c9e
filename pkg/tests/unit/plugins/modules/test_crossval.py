#!/usr/bin/env python3
"""
Unit tests for the crossval module.
"""

import unittest
from unittest.mock import Mock, patch

from ansible.module_utils.basic import AnsibleModule

from ansible_collections.gaitlab.msgcn.plugins.module_utils.config import validate_params
from ansible_collections.gaitlab.msgcn.plugins.module_utils.exceptions import (
    MsgcnLeakageError,
    TrainingDivergedError,
)
from ansible_collections.gaitlab.msgcn.plugins.modules import crossval

MODULE_PATH = "ansible_collections.gaitlab.msgcn.plugins.modules.crossval"


class TestCrossvalModule(unittest.TestCase):
    def setUp(self):
        self.mock_module = Mock(spec=AnsibleModule)
        params = validate_params({"model": {"variant": "ms-tcn"}, "train": {"lr": 0.001}, "jobs": 2})
        params.update({"manifest": "/data/synth", "output_dir": "/runs/crossval", "force": False, "graph": None})
        self.mock_module.params = params

    def test_run_action_passes_configuration(self):
        with patch(f"{MODULE_PATH}.cmd_crossval") as mock_cmd:
            mock_cmd.return_value = {"changed": True, "output_dir": "/runs/crossval"}
            results, err = crossval.run_action(self.mock_module)
        self.assertFalse(err)
        self.assertEqual(results["output_dir"], "/runs/crossval")
        config, manifest, output_dir, force, graph = mock_cmd.call_args[0]
        self.assertEqual(config.model.variant, "ms-tcn")
        self.assertEqual(config.train.learning_rate, 0.001)
        self.assertEqual(config.jobs, 2)
        self.assertEqual((manifest, output_dir, force, graph), ("/data/synth", "/runs/crossval", False, None))

    def test_numerical_failure(self):
        with patch(f"{MODULE_PATH}.cmd_crossval") as mock_cmd:
            mock_cmd.side_effect = TrainingDivergedError("Training loss became nan in epoch 3", epoch=3)
            results, err = crossval.run_action(self.mock_module)
        self.assertTrue(err)
        self.assertEqual(results["error"]["exit_code"], 3)
        self.assertEqual(results["error"]["context"]["epoch"], 3)

    def test_leakage_failure(self):
        with patch(f"{MODULE_PATH}.cmd_crossval") as mock_cmd:
            mock_cmd.side_effect = MsgcnLeakageError("Enrichment trials belong to evaluation subjects")
            results, err = crossval.run_action(self.mock_module)
        self.assertTrue(err)
        self.assertEqual(results["error"]["exit_code"], 4)

    def test_main(self):
        with patch(f"{MODULE_PATH}.AnsibleModule") as mock_class, patch(
            f"{MODULE_PATH}.cmd_crossval", return_value={"changed": True}
        ):
            mock_class.return_value = self.mock_module
            crossval.main()
        spec = mock_class.call_args[1]["argument_spec"]
        self.assertTrue(spec["manifest"]["required"])
        self.assertIn("train", spec)
        self.mock_module.exit_json.assert_called_once_with(changed=True)
        self.mock_module.fail_json.assert_not_called()


if __name__ == "__main__":
    unittest.main()

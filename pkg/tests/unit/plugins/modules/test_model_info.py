#!/usr/bin/env python3
"""
Unit tests for the model_info module.
"""

import unittest
from unittest.mock import Mock, patch

from ansible.module_utils.basic import AnsibleModule

from ansible_collections.gaitlab.msgcn.plugins.module_utils.config import validate_params
from ansible_collections.gaitlab.msgcn.plugins.modules import model_info

MODEL_INFO_MODULE_PATH = "ansible_collections.gaitlab.msgcn.plugins.modules.model_info"


class TestModelInfoModule(unittest.TestCase):
    def setUp(self):
        self.mock_module = Mock(spec=AnsibleModule)
        params = validate_params({})
        params.update({"checkpoint": None, "graph": None, "show_graph": False})
        self.mock_module.params = params

    def test_default_network(self):
        results, err = model_info.run_action(self.mock_module)
        self.assertFalse(err)
        self.assertFalse(results["changed"])
        self.assertEqual(results["parameters"], 752270)
        self.assertEqual(results["receptive_field"], 2047)

    def test_single_stage_variant(self):
        self.mock_module.params["model"]["variant"] = "st-gcn"
        results, err = model_info.run_action(self.mock_module)
        self.assertFalse(err)
        self.assertEqual(results["stages"], 1)
        self.assertEqual(results["parameters"], 251782)

    def test_missing_checkpoint(self):
        self.mock_module.params["checkpoint"] = "/nonexistent/model.msgcn"
        results, err = model_info.run_action(self.mock_module)
        self.assertTrue(err)
        self.assertEqual(results["error"]["error_type"], "CheckpointFormatError")

    def test_main_supports_check_mode(self):
        with patch(f"{MODEL_INFO_MODULE_PATH}.AnsibleModule") as mock_class:
            mock_class.return_value = self.mock_module
            model_info.main()
        kwargs = mock_class.call_args[1]
        self.assertTrue(kwargs["supports_check_mode"])
        self.assertIn(("checkpoint", "graph"), kwargs["mutually_exclusive"])
        self.mock_module.exit_json.assert_called_once()
        self.assertEqual(self.mock_module.exit_json.call_args[1]["parameters"], 752270)


if __name__ == "__main__":
    unittest.main()

#!/usr/bin/env python3
"""
Unit tests for the exception hierarchy and its exit codes.
"""

import unittest

try:
    from ansible_collections.gaitlab.msgcn.plugins.module_utils import exceptions as exc
except ImportError:
    from plugins.module_utils import exceptions as exc


class TestExitCodes(unittest.TestCase):
    def test_categories(self):
        cases = {
            exc.MsgcnError: 1,
            exc.MsgcnOperationError: 1,
            exc.TapeUsageError: 1,
            exc.DimensionError: 2,
            exc.ConfigurationError: 2,
            exc.TrialParseError: 2,
            exc.CheckpointFormatError: 2,
            exc.UndefinedCorrelationError: 2,
            exc.SynthesisError: 2,
            exc.DegenerateStatisticsError: 3,
            exc.NonFiniteGradientError: 3,
            exc.TrainingDivergedError: 3,
            exc.MsgcnLeakageError: 4,
        }
        for cls, code in cases.items():
            with self.subTest(error=cls.__name__):
                self.assertEqual(cls("boom").exit_code, code)
                self.assertTrue(issubclass(cls, exc.MsgcnError))


class TestMsgcnError(unittest.TestCase):
    def test_message_only(self):
        error = exc.MsgcnError("Something failed")
        self.assertEqual(str(error), "Something failed")
        self.assertEqual(error.kwargs, {})

    def test_wrapped_exception(self):
        error = exc.MsgcnOperationError("Cannot write", ValueError("disk full"))
        self.assertEqual(str(error), "Cannot write: disk full")

    def test_exception_only(self):
        self.assertEqual(str(exc.MsgcnError(exception=OSError("gone"))), "gone")

    def test_to_dict_keeps_serializable_context(self):
        error = exc.TrialParseError("bad value", line=7, path="t.csv", array=object())
        data = error.to_dict()
        self.assertEqual(data["error_type"], "TrialParseError")
        self.assertEqual(data["exit_code"], 2)
        self.assertEqual(data["context"], {"line": 7, "path": "t.csv"})

    def test_to_dict_original_exception(self):
        data = exc.MsgcnError("wrapped", KeyError("k")).to_dict()
        self.assertEqual(data["original_exception"]["type"], "KeyError")


if __name__ == "__main__":
    unittest.main()

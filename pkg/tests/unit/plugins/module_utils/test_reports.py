#!/usr/bin/env python3
"""
Unit tests for report and prediction file formats.
"""

import json
import os
import tempfile
import unittest

import numpy as np
import pandas as pd

try:
    from ansible_collections.gaitlab.msgcn.plugins.module_utils import reports
    from ansible_collections.gaitlab.msgcn.plugins.module_utils.exceptions import (
        CheckpointFormatError,
        DimensionError,
        TrialParseError,
    )
    from ansible_collections.gaitlab.msgcn.plugins.module_utils.metrics import evaluate_labels
except ImportError:
    from plugins.module_utils import reports
    from plugins.module_utils.exceptions import (
        CheckpointFormatError,
        DimensionError,
        TrialParseError,
    )
    from plugins.module_utils.metrics import evaluate_labels


class ReportTestCase(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()

    def tearDown(self):
        self.tmp.cleanup()

    def path(self, name):
        return os.path.join(self.tmp.name, name)

    def write_text(self, name, text):
        with open(self.path(name), "w") as handle:
            handle.write(text)
        return self.path(name)


class TestPredictionFrame(ReportTestCase):
    def test_columns_and_argmax(self):
        probs = np.array([[0.9, 0.4, 0.5], [0.1, 0.6, 0.5]])
        frame = reports.prediction_frame("T1", probs, np.array([0, 1, 1]))
        self.assertEqual(tuple(frame.columns), reports.PREDICTION_COLUMNS)
        self.assertEqual(frame["pred"].tolist(), [0, 1, 0])
        self.assertEqual(frame["sample"].tolist(), [0, 1, 2])

    def test_segment_columns(self):
        probs = np.full((2, 4), 0.5)
        frame = reports.prediction_frame("T1", probs, np.zeros(4, dtype=int), stage=2, final=False)
        self.assertEqual(tuple(frame.columns), reports.SEGMENT_COLUMNS)
        self.assertFalse(frame["final"].any())
        self.assertTrue((frame["stage"] == 2).all())

    def test_shape_mismatch(self):
        with self.assertRaises(DimensionError):
            reports.prediction_frame("T1", np.zeros((2, 3)), np.zeros(4, dtype=int))


class TestLabelStreams(ReportTestCase):
    def test_prediction_file_groups_and_sorts(self):
        frame = pd.DataFrame(
            {
                "trial_id": ["B", "A", "B", "A"],
                "sample": [1, 0, 0, 1],
                "pred": [1, 0, 0, 1],
            }
        )
        path = self.path("pred.csv")
        frame.to_csv(path, index=False)
        streams = reports.read_label_streams(path, "pred")
        self.assertEqual(list(streams), ["B", "A"])
        np.testing.assert_array_equal(streams["B"], [0, 1])
        np.testing.assert_array_equal(streams["A"], [0, 1])

    def test_segment_file_keeps_final_rows(self):
        frames = [
            reports.prediction_frame("T", np.array([[1.0, 0.0], [0.0, 1.0]]), np.array([0, 1]), 0, False),
            reports.prediction_frame("T", np.array([[0.0, 0.0], [1.0, 1.0]]), np.array([0, 1]), 1, True),
        ]
        path = reports.write_frame(pd.concat(frames, ignore_index=True), self.path("seg.csv"))
        np.testing.assert_array_equal(reports.read_label_streams(path, "pred")["T"], [1, 1])

    def test_trial_file_drops_last_label(self):
        path = self.write_text("trial.csv", "A_x,A_y,A_z,label\n0,0,0,0\n1,1,1,1\n2,2,2,1\n")
        np.testing.assert_array_equal(reports.read_label_streams(path, "label")[""], [0, 1])

    def test_invalid_label_line(self):
        path = self.write_text("pred.csv", "trial_id,sample,pred\nT,0,0\nT,1,2\n")
        with self.assertRaises(TrialParseError) as ctx:
            reports.read_label_streams(path, "pred")
        self.assertEqual(ctx.exception.kwargs["line"], 3)

    def test_missing_column(self):
        path = self.write_text("pred.csv", "trial_id,sample\nT,0\n")
        with self.assertRaises(TrialParseError) as ctx:
            reports.read_label_streams(path, "pred")
        self.assertEqual(ctx.exception.kwargs["line"], 1)

    def test_missing_file(self):
        with self.assertRaises(TrialParseError):
            reports.read_label_streams(self.path("absent.csv"), "pred")


class TestJson(ReportTestCase):
    def test_round_trip_with_numpy_values(self):
        path = reports.write_json({"mcc": np.float64(81.5), "counts": np.arange(3)}, self.path("r.json"))
        content = reports.read_json(path)
        self.assertEqual(content["format_version"], reports.REPORT_FORMAT_VERSION)
        self.assertEqual(content["mcc"], 81.5)
        self.assertEqual(content["counts"], [0, 1, 2])

    def test_unsupported_version(self):
        path = self.write_text("r.json", json.dumps({"format_version": "3.0"}))
        with self.assertRaises(CheckpointFormatError):
            reports.read_json(path)

    def test_unreadable(self):
        path = self.write_text("r.json", "{not json")
        with self.assertRaises(TrialParseError):
            reports.read_json(path)


class TestOutcomes(ReportTestCase):
    def test_relative_difference(self):
        self.assertAlmostEqual(reports.relative_tf_difference(30.0, 40.0), 25.0)
        self.assertIsNone(reports.relative_tf_difference(5.0, 0.0))

    def test_outcome_row(self):
        report = evaluate_labels([0, 1, 1, 0], [0, 1, 1, 1])
        row = reports.outcome_row("T1", "S1", report)
        self.assertEqual(row["percent_tf_model"], 50.0)
        self.assertEqual(row["percent_tf_expert"], 75.0)
        self.assertAlmostEqual(row["relative_tf_diff"], 100.0 / 3)
        self.assertEqual(row["nfog_model"], 1)
        self.assertEqual(row["f1_50"], 100.0)

    def test_frame_round_trip(self):
        rows = [
            reports.outcome_row("T1", "S1", evaluate_labels([0, 1, 1, 0], [0, 1, 1, 1])),
            reports.outcome_row("T2", "S2", evaluate_labels([0, 0], [0, 0])),
        ]
        path = reports.write_frame(reports.outcomes_frame(rows), self.path("outcomes.csv"))
        frame = reports.read_outcomes(path)
        self.assertEqual(tuple(frame.columns), reports.OUTCOME_COLUMNS)
        self.assertEqual(frame["nfog_expert"].tolist(), [1, 0])
        self.assertTrue(np.isnan(frame["relative_tf_diff"].iloc[1]))

    def test_non_numeric_outcome(self):
        path = self.write_text(
            "outcomes.csv",
            "percent_tf_model,percent_tf_expert,nfog_model,nfog_expert\n1,2,1,1\nx,2,1,1\n",
        )
        with self.assertRaises(TrialParseError) as ctx:
            reports.read_outcomes(path)
        self.assertEqual(ctx.exception.kwargs["line"], 3)


class TestSummary(ReportTestCase):
    def test_summary_mean_and_population_sd(self):
        perfect = evaluate_labels([0, 1, 1, 0], [0, 1, 1, 0])
        missed = evaluate_labels([0, 0, 0, 0], [0, 1, 1, 0])
        row = reports.summary_row("ms-gcn", [perfect, missed])
        self.assertEqual(row["f1_50_mean"], 50.0)
        self.assertEqual(row["f1_50_sd"], 50.0)
        self.assertEqual(row["mcc_mean"], 50.0)
        self.assertEqual(row["folds"], 2)
        self.assertEqual(
            tuple(reports.summary_frame([row]).columns), reports.summary_columns()
        )

    def test_summary_text(self):
        row = reports.summary_row("tcn", [evaluate_labels([0, 1], [0, 1])], thresholds=(0.5,))
        lines = reports.summary_text(row, thresholds=(0.5,))
        self.assertEqual(lines[0], "variant: tcn (1 folds)")
        self.assertEqual(lines[1], "F1@50: 100.0 ± 0.0")
        self.assertEqual(lines[2], "MCC: 100.0 ± 0.0")

    def test_subject_row_counts_nonfog_false_positives(self):
        pooled = evaluate_labels([0, 1, 1, 0], [0, 1, 1, 0])
        nonfog = [evaluate_labels([1, 0, 1, 0], [0, 0, 0, 0])]
        row = reports.subject_row("S1", pooled, nonfog)
        self.assertEqual(row["fp_nonfog"], 2)
        self.assertEqual(row["nonfog_trials"], 1)
        self.assertEqual(tuple(reports.subjects_frame([row]).columns), reports.SUBJECT_COLUMNS)


if __name__ == "__main__":
    unittest.main()

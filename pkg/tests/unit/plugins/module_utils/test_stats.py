#!/usr/bin/env python3
"""
Unit tests for the agreement statistics.
"""

import math
import unittest

import numpy as np
from scipy import stats as scipy_stats

try:
    from ansible_collections.gaitlab.msgcn.plugins.module_utils import stats
    from ansible_collections.gaitlab.msgcn.plugins.module_utils.exceptions import (
        MsgcnValidationError,
        UndefinedCorrelationError,
    )
except ImportError:
    from plugins.module_utils import stats
    from plugins.module_utils.exceptions import MsgcnValidationError, UndefinedCorrelationError


class TestClassifyStrength(unittest.TestCase):
    def test_cutoffs(self):
        cases = {
            0.93: "strong",
            0.8: "strong",
            0.75: "moderately strong",
            0.6: "moderately strong",
            0.55: "fair",
            0.3: "fair",
            0.29: "poor",
            -0.9: "strong",
        }
        for r, label in cases.items():
            with self.subTest(r=r):
                self.assertEqual(stats.classify_strength(r), label)


class TestPearson(unittest.TestCase):
    def test_exact_line(self):
        x = np.arange(10.0)
        result = stats.pearson_r(x, 2.0 * x)
        self.assertAlmostEqual(result.r, 1.0)
        self.assertEqual((result.ci_low, result.ci_high), (result.r, result.r))
        self.assertEqual(result.strength, "strong")

    def test_three_pairs_interval_is_unbounded(self):
        result = stats.pearson_r([1.0, 2.0, 3.0], [1.0, 3.0, 2.0])
        self.assertEqual((result.ci_low, result.ci_high), (-1.0, 1.0))

    def test_against_reference(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            n = int(rng.integers(5, 40))
            x = rng.normal(size=n)
            y = 0.7 * x + rng.normal(size=n)
            result = stats.pearson_r(x, y)
            r_ref = scipy_stats.pearsonr(x, y)[0]
            self.assertLessEqual(abs(result.r - r_ref), 1e-9)
            half = 1.96 / math.sqrt(n - 3)
            self.assertLessEqual(abs(result.ci_low - math.tanh(math.atanh(r_ref) - half)), 1e-9)
            self.assertLessEqual(abs(result.ci_high - math.tanh(math.atanh(r_ref) + half)), 1e-9)

    def test_errors(self):
        with self.assertRaises(UndefinedCorrelationError):
            stats.pearson_r([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])
        with self.assertRaises(MsgcnValidationError):
            stats.pearson_r([1.0, 2.0], [1.0, 2.0])
        with self.assertRaises(MsgcnValidationError):
            stats.pearson_r([1.0, 2.0, 3.0], [1.0, 2.0])
        with self.assertRaises(MsgcnValidationError):
            stats.pearson_r([1.0, np.nan, 3.0], [1.0, 2.0, 3.0])


class TestLinreg(unittest.TestCase):
    def test_exact_line_is_significant(self):
        x = np.arange(1.0, 8.0)
        result = stats.linreg(x, 2.0 * x)
        self.assertAlmostEqual(result.slope, 2.0)
        self.assertAlmostEqual(result.intercept, 0.0)
        self.assertTrue(result.significant)

    def test_against_normal_equations(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            n = int(rng.integers(4, 30))
            x = rng.uniform(0, 50, size=n)
            y = 1.5 * x + 3.0 + rng.normal(scale=5.0, size=n)
            result = stats.linreg(x, y)

            design = np.column_stack([np.ones(n), x])
            gram_inv = np.linalg.inv(design.T @ design)
            intercept, slope = gram_inv @ design.T @ y
            residuals = y - design @ np.array([intercept, slope])
            s2 = residuals @ residuals / (n - 2)
            t = scipy_stats.t.ppf(0.975, n - 2)
            se_intercept, se_slope = np.sqrt(s2 * np.diag(gram_inv))

            self.assertLessEqual(abs(result.slope - slope), 1e-9)
            self.assertLessEqual(abs(result.intercept - intercept), 1e-9)
            self.assertLessEqual(abs(result.slope_ci[0] - (slope - t * se_slope)), 1e-9)
            self.assertLessEqual(abs(result.slope_ci[1] - (slope + t * se_slope)), 1e-9)
            self.assertLessEqual(abs(result.intercept_ci[1] - (intercept + t * se_intercept)), 1e-9)

    def test_flat_relation_is_not_significant(self):
        result = stats.linreg([1.0, 2.0, 3.0, 4.0], [2.0, 1.0, 2.0, 1.0])
        self.assertFalse(result.significant)


class TestAgreementReport(unittest.TestCase):
    def test_structure(self):
        report = stats.agreement_report([1.0, 2.0, 3.0, 4.0, 5.0], [1.1, 2.3, 2.9, 4.2, 4.8])
        self.assertEqual(report["correlation"]["strength"], "strong")
        self.assertIsInstance(report["regression"]["slope_ci"], list)
        self.assertTrue(report["regression"]["significant"])
        self.assertEqual(report["regression"]["interpretation"], "statistically significant")


if __name__ == "__main__":
    unittest.main()

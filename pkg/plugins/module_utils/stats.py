# -*- coding: utf-8 -*-
"""
Agreement statistics between expert annotations and model predictions.

Pearson correlation with a Fisher-z confidence interval, ordinary least squares
with Student-t intervals on slope and intercept, and a verbal classification of
correlation strength. The expert value is the regressor (x) and the model value
the response (y).
"""

from __future__ import absolute_import, division, print_function

import logging
import math
from dataclasses import asdict, dataclass
from typing import Any, Dict, Sequence, Tuple

import numpy as np
from scipy import stats as scipy_stats

from .exceptions import MsgcnValidationError, UndefinedCorrelationError

__metaclass__ = type

CONFIDENCE = 0.95
NORMAL_QUANTILE = 1.96
STRENGTH_CUTOFFS = ((0.8, "strong"), (0.6, "moderately strong"), (0.3, "fair"))
WEAKEST_STRENGTH = "poor"

logger = logging.getLogger(__name__)


def _paired(x: Sequence[float], y: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    xa = np.asarray(x, dtype=np.float64).reshape(-1)
    ya = np.asarray(y, dtype=np.float64).reshape(-1)
    if xa.size != ya.size:
        raise MsgcnValidationError(f"x has {xa.size} values but y has {ya.size}")
    if xa.size < 3:
        raise MsgcnValidationError(f"at least 3 paired observations are required, got {xa.size}")
    if not (np.all(np.isfinite(xa)) and np.all(np.isfinite(ya))):
        raise MsgcnValidationError("paired observations must be finite")
    if np.all(xa == xa[0]) or np.all(ya == ya[0]):
        raise UndefinedCorrelationError(
            "correlation is undefined when x or y has zero variance", n=int(xa.size)
        )
    return xa, ya


@dataclass(frozen=True)
class Correlation:
    r: float
    ci_low: float
    ci_high: float
    n: int
    strength: str


def classify_strength(r: float) -> str:
    """
    Verbal strength of a correlation coefficient, judged on |r|.

    >= 0.8 strong, >= 0.6 moderately strong, >= 0.3 fair, otherwise poor.
    """
    magnitude = abs(r)
    for cutoff, label in STRENGTH_CUTOFFS:
        if magnitude >= cutoff:
            return label
    return WEAKEST_STRENGTH


def pearson_r(x: Sequence[float], y: Sequence[float]) -> Correlation:
    """
    Pearson correlation with a 95% Fisher-z interval.

    Raises:
        MsgcnValidationError: For fewer than 3 pairs or mismatched lengths
        UndefinedCorrelationError: If x or y is constant
    """
    xa, ya = _paired(x, y)
    n = xa.size
    dx = xa - xa.mean()
    dy = ya - ya.mean()
    r = float(np.sum(dx * dy) / math.sqrt(np.sum(dx * dx) * np.sum(dy * dy)))
    r = min(1.0, max(-1.0, r))
    if abs(r) == 1.0 or n <= 3:
        low, high = (r, r) if abs(r) == 1.0 else (-1.0, 1.0)
    else:
        z = math.atanh(r)
        half = NORMAL_QUANTILE / math.sqrt(n - 3)
        low, high = math.tanh(z - half), math.tanh(z + half)
    return Correlation(r=r, ci_low=low, ci_high=high, n=int(n), strength=classify_strength(r))


@dataclass(frozen=True)
class Regression:
    slope: float
    intercept: float
    slope_ci: Tuple[float, float]
    intercept_ci: Tuple[float, float]
    n: int

    @property
    def significant(self) -> bool:
        """Slope interval excludes zero."""
        low, high = self.slope_ci
        return low > 0.0 or high < 0.0


def linreg(x: Sequence[float], y: Sequence[float]) -> Regression:
    """
    Ordinary least squares ``y = slope * x + intercept`` with 95% t intervals (df = n - 2).

    Raises:
        MsgcnValidationError: For fewer than 3 pairs or mismatched lengths
        UndefinedCorrelationError: If x or y is constant
    """
    xa, ya = _paired(x, y)
    n = xa.size
    x_mean = xa.mean()
    dx = xa - x_mean
    sxx = float(np.sum(dx * dx))
    slope = float(np.sum(dx * (ya - ya.mean())) / sxx)
    intercept = float(ya.mean() - slope * x_mean)
    residuals = ya - (slope * xa + intercept)
    s2 = float(np.sum(residuals * residuals)) / (n - 2)
    se_slope = math.sqrt(s2 / sxx)
    se_intercept = math.sqrt(s2 * (1.0 / n + x_mean * x_mean / sxx))
    t = float(scipy_stats.t.ppf(0.5 + CONFIDENCE / 2.0, n - 2))
    return Regression(
        slope=slope,
        intercept=intercept,
        slope_ci=(slope - t * se_slope, slope + t * se_slope),
        intercept_ci=(intercept - t * se_intercept, intercept + t * se_intercept),
        n=int(n),
    )


def agreement_report(expert: Sequence[float], model: Sequence[float]) -> Dict[str, Any]:
    """Correlation and regression of model outcomes against expert outcomes."""
    correlation = pearson_r(expert, model)
    regression = linreg(expert, model)
    report = {"correlation": asdict(correlation), "regression": asdict(regression)}
    report["regression"]["slope_ci"] = list(regression.slope_ci)
    report["regression"]["intercept_ci"] = list(regression.intercept_ci)
    report["regression"]["significant"] = regression.significant
    report["regression"]["interpretation"] = (
        "statistically significant" if regression.significant else "not statistically significant"
    )
    logger.debug(
        f"r={correlation.r:.3f} ({correlation.strength}), slope={regression.slope:.3f}"
    )
    return report

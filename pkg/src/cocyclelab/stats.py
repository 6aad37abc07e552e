# ABOUTME: Small statistical helpers shared by the Monte Carlo estimators
# ABOUTME: Wilson intervals, batch-means standard errors, and least-squares line fits

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

# Number of contiguous batches used for batch-means standard errors.
DEFAULT_BATCHES = 20


@dataclass(frozen=True)
class LineFit:
    """Least-squares line y ≈ slope·x + intercept with its coefficient of determination."""

    slope: float
    intercept: float
    r_squared: float
    points: int


def wilson_interval(hits: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    """
    Wilson score interval for a binomial proportion.

    Args:
        hits: Number of successes
        trials: Number of trials
        confidence: Two-sided confidence level

    Returns:
        (lower, upper) bounds; (0, 1) when trials is zero
    """
    if trials <= 0:
        return 0.0, 1.0
    z = float(stats.norm.ppf(0.5 + confidence / 2.0))
    p = hits / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2.0 * trials)) / denom
    half = z * math.sqrt(p * (1.0 - p) / trials + z * z / (4.0 * trials * trials)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def mean_stderr(values: np.ndarray) -> tuple[float, float]:
    """Sample mean and its naive standard error."""
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        return float(values.mean()) if values.size else math.nan, math.nan
    return float(values.mean()), float(values.std(ddof=1) / math.sqrt(values.size))


def batch_means(values: np.ndarray, batches: int = DEFAULT_BATCHES) -> tuple[float, float]:
    """
    Mean and batch-means standard error over contiguous, equal-size batches.

    Trailing values that do not fill a batch are included in the mean but
    not in the error estimate.
    """
    values = np.asarray(values, dtype=float)
    size = values.size // batches
    if size == 0:
        return mean_stderr(values)
    per_batch = values[: size * batches].reshape(batches, size).mean(axis=1)
    return float(values.mean()), float(per_batch.std(ddof=1) / math.sqrt(batches))


def batch_statistic_stderr(values: np.ndarray, statistic, batches: int = DEFAULT_BATCHES) -> float:
    """Batch-means standard error of an arbitrary per-batch statistic."""
    values = np.asarray(values, dtype=float)
    size = values.size // batches
    if size < 2:
        return math.nan
    per_batch = np.array(
        [statistic(chunk) for chunk in values[: size * batches].reshape(batches, size)]
    )
    return float(per_batch.std(ddof=1) / math.sqrt(batches))


def fit_line(x: np.ndarray, y: np.ndarray) -> LineFit:
    """Ordinary least-squares fit; NaN slope when fewer than two distinct points."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2 or np.ptp(x) == 0.0:
        return LineFit(slope=math.nan, intercept=math.nan, r_squared=math.nan, points=int(x.size))
    result = stats.linregress(x, y)
    return LineFit(
        slope=float(result.slope),
        intercept=float(result.intercept),
        r_squared=float(result.rvalue**2),
        points=int(x.size),
    )

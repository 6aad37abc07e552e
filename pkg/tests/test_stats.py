# ABOUTME: Tests for the statistical helpers
# ABOUTME: Wilson intervals, standard errors, batch means and line fits

import math

import numpy as np
import pytest

from cocyclelab.stats import batch_means, fit_line, mean_stderr, wilson_interval


class TestWilsonInterval:
    """Tests for binomial confidence intervals."""

    def test_no_trials(self):
        """Without trials the interval is [0, 1]."""
        assert wilson_interval(0, 0) == (0.0, 1.0)

    def test_zero_hits(self):
        """No hits give a zero lower bound and a small positive upper bound."""
        lower, upper = wilson_interval(0, 100)
        assert lower == 0.0
        assert 0.0 < upper < 0.05

    def test_contains_estimate(self):
        """The interval brackets the empirical proportion."""
        lower, upper = wilson_interval(30, 100)
        assert lower < 0.3 < upper

    def test_higher_confidence_is_wider(self):
        """A 99% interval contains the 95% interval."""
        lo95, hi95 = wilson_interval(30, 100, 0.95)
        lo99, hi99 = wilson_interval(30, 100, 0.99)
        assert lo99 < lo95 and hi99 > hi95


class TestStandardErrors:
    """Tests for mean and batch-means errors."""

    def test_mean_stderr(self):
        """Naive standard error is s/√n."""
        mean, stderr = mean_stderr(np.array([1.0, 2.0, 3.0, 4.0]))
        assert mean == pytest.approx(2.5)
        assert stderr == pytest.approx(np.std([1, 2, 3, 4], ddof=1) / 2.0)

    def test_single_value(self):
        """One value has no standard error."""
        mean, stderr = mean_stderr(np.array([3.0]))
        assert mean == 3.0
        assert math.isnan(stderr)

    def test_batch_means_constant(self):
        """Constant data have zero batch-means error."""
        mean, stderr = batch_means(np.full(1000, 2.0))
        assert mean == 2.0
        assert stderr == 0.0


class TestFitLine:
    """Tests for least-squares fits."""

    def test_exact_line(self):
        """Points on a line are fitted exactly."""
        x = np.arange(5.0)
        fit = fit_line(x, 2.0 * x - 1.0)
        assert fit.slope == pytest.approx(2.0)
        assert fit.intercept == pytest.approx(-1.0)
        assert fit.r_squared == pytest.approx(1.0)

    def test_single_point(self):
        """Fewer than two distinct abscissae give NaN."""
        fit = fit_line(np.array([1.0]), np.array([2.0]))
        assert math.isnan(fit.slope)
        assert fit.points == 1

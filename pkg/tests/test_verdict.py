# ABOUTME: Tests for verification criteria and the aggregate exit code
# ABOUTME: Covers threshold comparisons, NaN handling and summary lines

import math

from cocyclelab.experiments.verdict import (
    EXIT_FAIL,
    EXIT_INCONCLUSIVE,
    EXIT_PASS,
    Criterion,
    Verdict,
    aggregate_exit_code,
    at_least,
    at_most,
    check,
)


class TestCriteria:
    """Tests for the criterion constructors."""

    def test_at_most(self):
        """measured ≤ threshold passes, including equality."""
        assert at_most("a", 1.0, 1.0).verdict is Verdict.PASS
        assert at_most("a", 1.5, 1.0).verdict is Verdict.FAIL

    def test_at_least(self):
        """measured ≥ threshold passes."""
        assert at_least("b", 0.95, 0.9).verdict is Verdict.PASS
        assert at_least("b", 0.5, 0.9).verdict is Verdict.FAIL

    def test_nan_is_inconclusive(self):
        """Values that could not be computed give INCONCLUSIVE."""
        criterion = at_most("c", math.nan, 1.0)
        assert criterion.verdict is Verdict.INCONCLUSIVE
        assert criterion.note == "not computable"

    def test_reason_overrides_comparison(self):
        """A reason withholds judgment even when the comparison fails."""
        criterion = at_least("d", 0.0, 1.0, inconclusive="trials < 10000")
        assert criterion.verdict is Verdict.INCONCLUSIVE
        assert criterion.note == "trials < 10000"

    def test_check(self):
        """Boolean criteria follow the flag."""
        assert check("e", True, 1.0, 0.0).verdict is Verdict.PASS
        assert check("e", False, 1.0, 0.0).verdict is Verdict.FAIL

    def test_summary_line(self):
        """Summary lines carry verdict, name, values and the note."""
        line = Criterion("be_bounded[one]", Verdict.INCONCLUSIVE, 0.25, math.nan, "few trials")
        assert line.summary_line() == (
            "INCONCLUSIVE be_bounded[one] measured=0.25 threshold=nan (few trials)"
        )


class TestAggregateExitCode:
    """Tests for aggregate_exit_code."""

    def test_all_pass(self):
        """Only passes give 0, as does an empty run."""
        assert aggregate_exit_code([at_most("a", 0.0, 1.0)]) == EXIT_PASS
        assert aggregate_exit_code([]) == EXIT_PASS

    def test_fail_dominates(self):
        """Any failure gives 2."""
        criteria = [at_most("a", 2.0, 1.0), at_most("b", math.nan, 1.0)]
        assert aggregate_exit_code(criteria) == EXIT_FAIL

    def test_inconclusive(self):
        """Inconclusive without failures gives 3."""
        criteria = [at_most("a", 0.0, 1.0), at_most("b", math.nan, 1.0)]
        assert aggregate_exit_code(criteria) == EXIT_INCONCLUSIVE

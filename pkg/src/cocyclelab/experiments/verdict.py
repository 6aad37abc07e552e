# ABOUTME: Verdicts for verification criteria and the aggregate process exit code
# ABOUTME: Each criterion is PASS, FAIL or INCONCLUSIVE with its measured value and threshold

import math
from collections.abc import Sequence
from dataclasses import dataclass
from enum import Enum

EXIT_PASS = 0
EXIT_FAIL = 2
EXIT_INCONCLUSIVE = 3


class Verdict(Enum):
    PASS = "PASS"
    FAIL = "FAIL"
    INCONCLUSIVE = "INCONCLUSIVE"


@dataclass
class Criterion:
    """
    Outcome of one verification criterion.

    Attributes:
        name: Criterion identifier (e.g. "be_bounded[one,one,(-inf,0]]")
        verdict: PASS, FAIL or INCONCLUSIVE
        measured: Measured value
        threshold: Value it was compared with
        note: Short reason, mainly for INCONCLUSIVE
    """

    name: str
    verdict: Verdict
    measured: float
    threshold: float
    note: str = ""

    def summary_line(self) -> str:
        line = (
            f"{self.verdict.value} {self.name} "
            f"measured={_fmt(self.measured)} threshold={_fmt(self.threshold)}"
        )
        return f"{line} ({self.note})" if self.note else line


def _fmt(value: float) -> str:
    return "nan" if math.isnan(value) else format(value, ".6g")


def at_most(
    name: str, measured: float, threshold: float, inconclusive: str | None = None
) -> Criterion:
    """
    Criterion measured ≤ threshold.

    Args:
        name: Criterion identifier
        measured: Measured value
        threshold: Upper limit
        inconclusive: Reason to withhold judgment, if any

    Returns:
        INCONCLUSIVE when a reason is given or a value is NaN, else PASS or FAIL
    """
    if inconclusive:
        return Criterion(name, Verdict.INCONCLUSIVE, measured, threshold, inconclusive)
    if math.isnan(measured) or math.isnan(threshold):
        return Criterion(name, Verdict.INCONCLUSIVE, measured, threshold, "not computable")
    verdict = Verdict.PASS if measured <= threshold else Verdict.FAIL
    return Criterion(name, verdict, measured, threshold)


def at_least(
    name: str, measured: float, threshold: float, inconclusive: str | None = None
) -> Criterion:
    """Criterion measured ≥ threshold; see at_most."""
    if inconclusive:
        return Criterion(name, Verdict.INCONCLUSIVE, measured, threshold, inconclusive)
    if math.isnan(measured) or math.isnan(threshold):
        return Criterion(name, Verdict.INCONCLUSIVE, measured, threshold, "not computable")
    verdict = Verdict.PASS if measured >= threshold else Verdict.FAIL
    return Criterion(name, verdict, measured, threshold)


def check(name: str, passed: bool, measured: float, threshold: float) -> Criterion:
    """Criterion decided by a precomputed boolean."""
    return Criterion(name, Verdict.PASS if passed else Verdict.FAIL, measured, threshold)


def aggregate_exit_code(criteria: Sequence[Criterion]) -> int:
    """
    Exit code of a verification run.

    Returns:
        2 if any criterion failed, else 3 if any is inconclusive, else 0
    """
    verdicts = {c.verdict for c in criteria}
    if Verdict.FAIL in verdicts:
        return EXIT_FAIL
    if Verdict.INCONCLUSIVE in verdicts:
        return EXIT_INCONCLUSIVE
    return EXIT_PASS

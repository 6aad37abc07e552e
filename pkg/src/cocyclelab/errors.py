# ABOUTME: Exception hierarchy for cocycle-lab
# ABOUTME: Each error class carries the process exit code the CLI maps it to


class LabError(Exception):
    """Base class for every error raised by cocycle-lab."""

    exit_code: int = 1


class ConfigError(LabError):
    """Experiment configuration could not be parsed or validated.

    Attributes:
        line: 1-based line in the config document, when known
        field: Dotted path of the offending field, when known
    """

    exit_code = 64

    def __init__(self, message: str, line: int | None = None, field: str | None = None):
        self.line = line
        self.field = field
        where = []
        if field:
            where.append(f"field '{field}'")
        if line is not None:
            where.append(f"line {line}")
        suffix = f" ({', '.join(where)})" if where else ""
        super().__init__(f"{message}{suffix}")


class UsageError(LabError):
    """Command line could not be understood."""

    exit_code = 65


class DimensionError(LabError):
    """Operation requires a different matrix dimension."""

    exit_code = 70


class NoConvergenceError(LabError):
    """An iterative solver hit its iteration cap."""

    exit_code = 71


class PreconditionError(LabError, ValueError):
    """Arguments violate a documented precondition."""

    exit_code = 72


class InsufficientMassError(LabError):
    """Too few samples fall in the region an estimator needs."""

    exit_code = 73


class DegenerateVarianceError(LabError, ValueError):
    """A variance parameter is zero or negative where a positive one is required."""

    exit_code = 74


class SingularInputError(LabError, ValueError):
    """A point lies on the singular set of an admissible function."""

    exit_code = 75


class GridMismatchError(LabError):
    """Two sampled objects live on incompatible grids."""

    exit_code = 76


class SingularityError(LabError):
    """A symmetrized integrand is not bounded near the origin."""

    exit_code = 77


class EmptySampleError(LabError, ValueError):
    """An estimator received no samples."""

    exit_code = 78


class MeasureError(LabError, ValueError):
    """A measure literal or matrix is malformed."""

    exit_code = 79

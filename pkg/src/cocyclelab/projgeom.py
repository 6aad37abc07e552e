# ABOUTME: Geometry of real projective space and the linear group action on it
# ABOUTME: Group elements, canonical line representatives, norm cocycle, sine distance, coefficients

import logging
import math
from collections.abc import Iterator, Sequence
from dataclasses import dataclass
from enum import Enum
from typing import Self, overload

import numpy as np

from cocyclelab.errors import MeasureError

logger = logging.getLogger(__name__)

# Coordinates below this magnitude are treated as zero when choosing the sign
# of a canonical representative.
ZERO_THRESHOLD = 1e-14

# Relative tolerance for the power iteration that computes operator norms.
NORM_TOLERANCE = 1e-12
NORM_MAX_ITERATIONS = 100_000

# Largest accepted condition number for a group element.
MAX_CONDITION = 1e12


class Extended(Enum):
    """Infinite values of an extended-real result.

    Kept apart from floats so that a singular value cannot flow into
    arithmetic unnoticed.
    """

    NEG_INF = "-inf"
    POS_INF = "+inf"


ExtendedReal = float | Extended


def operator_norm(matrix: np.ndarray) -> float:
    """
    Spectral norm of a real matrix by power iteration on its Gram matrix.

    Iterates v -> AᵀA v until the Rayleigh quotient changes by less than
    NORM_TOLERANCE relative to its value.

    Args:
        matrix: Square real matrix

    Returns:
        The largest singular value
    """
    gram = matrix.T @ matrix
    dim = gram.shape[0]
    # Fixed, non-symmetric start vector keeps the result deterministic.
    v = 1.0 + 0.1 * np.arange(dim, dtype=float)
    v /= np.linalg.norm(v)
    rayleigh = float(v @ gram @ v)
    for _ in range(NORM_MAX_ITERATIONS):
        w = gram @ v
        w_norm = np.linalg.norm(w)
        if w_norm == 0.0:
            return 0.0
        v = w / w_norm
        updated = float(v @ gram @ v)
        if abs(updated - rayleigh) <= NORM_TOLERANCE * abs(updated):
            rayleigh = updated
            break
        rayleigh = updated
    else:
        logger.debug(f"operator_norm stopped at the iteration cap (dim={dim})")
    return math.sqrt(max(rayleigh, 0.0))


@dataclass(frozen=True, eq=False)
class GroupElement:
    """
    An invertible d×d real matrix with cached inverse and operator norms.

    Attributes:
        entries: The matrix g (read-only)
        inv_entries: The inverse matrix g⁻¹ (read-only)
        opnorm: ‖g‖
        inv_opnorm: ‖g⁻¹‖
        norm_n: N(g) = max(‖g‖, ‖g⁻¹‖) ≥ 1
    """

    entries: np.ndarray
    inv_entries: np.ndarray
    opnorm: float
    inv_opnorm: float
    norm_n: float

    @classmethod
    def from_matrix(cls, matrix: Sequence[Sequence[float]] | np.ndarray) -> Self:
        """
        Build a group element from a row-major matrix.

        Args:
            matrix: Square matrix as nested lists or an array

        Returns:
            The validated GroupElement

        Raises:
            MeasureError: If the matrix is not square, not finite or not invertible
        """
        entries = np.array(matrix, dtype=float)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1] or entries.shape[0] < 2:
            raise MeasureError(f"Expected a square matrix of size ≥ 2, got shape {entries.shape}")
        if not np.all(np.isfinite(entries)):
            raise MeasureError("Matrix entries must be finite")
        try:
            inv_entries = np.linalg.inv(entries)
        except np.linalg.LinAlgError as e:
            raise MeasureError(f"Matrix is singular: {entries.tolist()}") from e
        if np.linalg.cond(entries) > MAX_CONDITION:
            raise MeasureError(f"Matrix is numerically singular: {entries.tolist()}")

        product = entries @ inv_entries
        identity = np.eye(entries.shape[0])
        if np.max(np.abs(product - identity)) > 1e-10 * max(1.0, np.max(np.abs(entries))):
            raise MeasureError("Inverse failed the g·g⁻¹ = I check")

        entries.flags.writeable = False
        inv_entries.flags.writeable = False
        opnorm = operator_norm(entries)
        inv_opnorm = operator_norm(inv_entries)
        # N(g) ≥ 1 holds because ‖g‖·‖g⁻¹‖ ≥ 1; the max guards rounding.
        norm_n = max(opnorm, inv_opnorm, 1.0)
        return cls(
            entries=entries,
            inv_entries=inv_entries,
            opnorm=opnorm,
            inv_opnorm=inv_opnorm,
            norm_n=norm_n,
        )

    @property
    def dimension(self) -> int:
        return int(self.entries.shape[0])

    @property
    def log_norm_n(self) -> float:
        return math.log(self.norm_n)


def rotation(theta: float) -> GroupElement:
    """Rotation of the plane by angle theta."""
    c, s = math.cos(theta), math.sin(theta)
    return GroupElement.from_matrix([[c, -s], [s, c]])


def diagonal(*values: float) -> GroupElement:
    """Diagonal group element with the given entries."""
    return GroupElement.from_matrix(np.diag(values))


def compose(g2: GroupElement, g1: GroupElement) -> GroupElement:
    """The product g2·g1 (apply g1 first)."""
    return GroupElement.from_matrix(g2.entries @ g1.entries)


def act_rows(g: GroupElement, reps: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise images g·v of unit representatives and their norms ‖g·v‖."""
    moved = np.asarray(reps, dtype=float) @ g.entries.T
    return moved, np.linalg.norm(moved, axis=1)


def canonicalize_rows(vectors: np.ndarray) -> np.ndarray:
    """
    Normalize each row and flip its sign so the first non-negligible coordinate is positive.

    Args:
        vectors: Array of shape (count, d) with nonzero rows

    Returns:
        New array of canonical unit representatives
    """
    vectors = np.asarray(vectors, dtype=float)
    norms = np.linalg.norm(vectors, axis=1)
    units = vectors / norms[:, None]
    leading = np.argmax(np.abs(units) > ZERO_THRESHOLD, axis=1)
    signs = np.sign(units[np.arange(units.shape[0]), leading])
    signs[signs == 0.0] = 1.0
    return units * signs[:, None]


class _Line:
    """A line stored by its sign-canonical unit representative."""

    rep: tuple[float, ...]

    @classmethod
    def from_vector(cls, vector: Sequence[float] | np.ndarray) -> Self:
        """
        Canonical line through a nonzero vector.

        Raises:
            MeasureError: If the vector is zero or not finite
        """
        array = np.asarray(vector, dtype=float).reshape(1, -1)
        if not np.all(np.isfinite(array)) or np.linalg.norm(array) == 0.0:
            raise MeasureError(f"Cannot span a line with {list(np.ravel(array))}")
        rep = tuple(float(c) for c in canonicalize_rows(array)[0])
        return cls(rep=rep)  # type: ignore[call-arg]

    @classmethod
    def from_angle(cls, theta: float) -> Self:
        """Line in the plane spanned by (cos θ, sin θ)."""
        return cls.from_vector([math.cos(theta), math.sin(theta)])

    @classmethod
    def basis(cls, index: int, dimension: int = 2) -> Self:
        """Line spanned by the standard basis vector e_{index+1}."""
        vector = np.zeros(dimension)
        vector[index] = 1.0
        return cls.from_vector(vector)

    @property
    def vector(self) -> np.ndarray:
        return np.array(self.rep)

    @property
    def dimension(self) -> int:
        return len(self.rep)

    @property
    def angle(self) -> float:
        """Angle in [0, π) of a planar line."""
        return float(math.atan2(self.rep[1], self.rep[0]) % math.pi)


@dataclass(frozen=True)
class ProjPoint(_Line):
    """A point x = [v] of projective space."""

    rep: tuple[float, ...]


@dataclass(frozen=True)
class DualProjPoint(_Line):
    """A point y = [f] of the dual projective space; it defines the hyperplane H_y = ℙ(ker f)."""

    rep: tuple[float, ...]

    @classmethod
    def from_covector(cls, covector: Sequence[float] | np.ndarray) -> Self:
        return cls.from_vector(covector)


class ProjSample(Sequence[ProjPoint]):
    """
    An immutable sequence of projective points backed by one array of representatives.

    Indexing yields ProjPoint objects; numerical code reads `reps` directly.
    """

    def __init__(self, reps: np.ndarray):
        reps = canonicalize_rows(np.atleast_2d(np.asarray(reps, dtype=float)))
        reps.flags.writeable = False
        self.reps = reps

    def __len__(self) -> int:
        return int(self.reps.shape[0])

    @overload
    def __getitem__(self, index: int) -> ProjPoint: ...

    @overload
    def __getitem__(self, index: slice) -> "ProjSample": ...

    def __getitem__(self, index: int | slice) -> "ProjPoint | ProjSample":
        if isinstance(index, slice):
            return ProjSample(self.reps[index])
        return ProjPoint(rep=tuple(float(c) for c in self.reps[index]))

    def __iter__(self) -> Iterator[ProjPoint]:
        for row in self.reps:
            yield ProjPoint(rep=tuple(float(c) for c in row))


def as_reps(points: Sequence[ProjPoint]) -> np.ndarray:
    """Array of representatives for any sequence of projective points."""
    if isinstance(points, ProjSample):
        return points.reps
    if len(points) == 0:
        return np.empty((0, 0))
    return np.array([p.rep for p in points], dtype=float)


def angles_of(reps: np.ndarray) -> np.ndarray:
    """Angles in [0, π) of planar line representatives given as rows."""
    return np.mod(np.arctan2(reps[:, 1], reps[:, 0]), np.pi)


def act(g: GroupElement, x: ProjPoint) -> ProjPoint:
    """The point g·x = [g v]."""
    return ProjPoint.from_vector(g.entries @ x.vector)


def cocycle(g: GroupElement, x: ProjPoint) -> float:
    """
    Norm cocycle σ(g, x) = log(‖g v‖ / ‖v‖).

    Examples:
        >>> cocycle(diagonal(2.0, 2.0), ProjPoint.basis(0))
        0.6931471805599453
    """
    return float(math.log(np.linalg.norm(g.entries @ x.vector)))


def proj_distance(x: ProjPoint, w: ProjPoint) -> float:
    """
    Sine of the angle between two lines.

    Computed as the length of the component of one unit representative
    orthogonal to the other, which stays accurate for nearby points.
    """
    v, u = x.vector, w.vector
    residual = v - float(v @ u) * u
    return float(min(1.0, np.linalg.norm(residual)))


def delta(x: ProjPoint, y: DualProjPoint) -> float:
    """Distance δ(x, y) = |⟨f, v⟩| from x to the hyperplane H_y."""
    return float(min(1.0, abs(float(np.dot(y.vector, x.vector)))))


def log_coefficient(g: GroupElement, v_dir: ProjPoint, f_dir: DualProjPoint) -> ExtendedReal:
    """
    Log of the normalized matrix coefficient |⟨f, g v⟩| / (‖f‖‖v‖).

    Equals cocycle(g, v_dir) + log(delta(act(g, v_dir), f_dir)) whenever the
    pairing is nonzero.

    Returns:
        The logarithm, or Extended.NEG_INF when ⟨f, g v⟩ = 0 exactly
    """
    pairing = float(np.dot(f_dir.vector, g.entries @ v_dir.vector))
    if pairing == 0.0:
        return Extended.NEG_INF
    return math.log(abs(pairing))

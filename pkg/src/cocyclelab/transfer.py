# ABOUTME: Discretized transfer operators P_z on the projective line and their spectral data
# ABOUTME: Leading eigenpair, spectral gap, λ-expansion, Λ(s) derivatives, Cramér series, tilting

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Literal

import numpy as np
from scipy import optimize, sparse
from scipy.special import logsumexp

from cocyclelab.errors import (
    DegenerateVarianceError,
    DimensionError,
    NoConvergenceError,
    PreconditionError,
)
from cocyclelab.projgeom import ProjPoint, act_rows, angles_of
from cocyclelab.randwalk import MeasureSpec, WalkBatch, WalkRecord, run_walks
from cocyclelab.stats import fit_line

logger = logging.getLogger(__name__)

# Operational stand-ins for the perturbative window of the twisted operators:
# |Re z| ≤ MAX_REAL_PART and |Im z| ≤ XI0_OP for eigen-solves.
MAX_REAL_PART = 0.5
XI0_OP = 0.5

DEFAULT_GRID_M = 1024
MIN_GRID_M = 64

EIGEN_TOLERANCE = 1e-10
MAX_ITERATIONS = 100_000

# Finite-difference derivatives of Λ need λ_s far below the default tolerance.
DERIVATIVE_TOLERANCE = 1e-14
DEFAULT_DERIVATIVE_STEP = 0.05

# Deflated iteration for |λ₂|: checked every GAP_CHECK_EVERY steps, stopped
# once the growth-rate estimate moves by less than GAP_TOLERANCE.
GAP_CHECK_EVERY = 50
GAP_TOLERANCE = 1e-6
GAP_MAX_ITERATIONS = 5_000


@dataclass(frozen=True)
class CircleGrid:
    """
    Uniform grid θ_i = iπ/m on ℙ¹ ≅ [0, π).

    Attributes:
        m: Number of nodes (≥ 64)
        order: Interpolation order, 1 (linear) or 3 (periodic cubic Lagrange)
    """

    m: int = DEFAULT_GRID_M
    order: Literal[1, 3] = 1

    def __post_init__(self):
        if self.m < MIN_GRID_M:
            raise PreconditionError(f"Grid needs at least {MIN_GRID_M} nodes, got {self.m}")
        if self.order not in (1, 3):
            raise PreconditionError(f"Interpolation order must be 1 or 3, got {self.order}")

    @property
    def step(self) -> float:
        return math.pi / self.m

    @property
    def angles(self) -> np.ndarray:
        return np.arange(self.m) * self.step

    @property
    def points(self) -> np.ndarray:
        """Unit representatives (cos θ_i, sin θ_i), one row per node."""
        theta = self.angles
        return np.column_stack([np.cos(theta), np.sin(theta)])

    def weights(self, angles: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """
        Periodic interpolation stencils at arbitrary angles.

        Returns:
            (indices, weights), both of shape (len(angles), order + 1)
        """
        position = np.mod(np.asarray(angles, dtype=float), math.pi) / self.step
        base = np.floor(position)
        f = position - base
        base = base.astype(np.int64)
        if self.order == 1:
            offsets = np.array([0, 1])
            w = np.column_stack([1.0 - f, f])
        else:
            offsets = np.array([-1, 0, 1, 2])
            w = np.column_stack(
                [
                    -f * (f - 1.0) * (f - 2.0) / 6.0,
                    (f + 1.0) * (f - 1.0) * (f - 2.0) / 2.0,
                    -(f + 1.0) * f * (f - 2.0) / 2.0,
                    (f + 1.0) * f * (f - 1.0) / 6.0,
                ]
            )
        indices = np.mod(base[:, None] + offsets[None, :], self.m)
        return indices, w

    def interpolate(self, values: np.ndarray, angles: np.ndarray) -> np.ndarray:
        """Evaluate a grid function at arbitrary angles."""
        indices, w = self.weights(angles)
        return (np.asarray(values)[indices] * w).sum(axis=1)


@dataclass(frozen=True, eq=False)
class TransferOperator:
    """
    Discretization of P_z φ(x) = Σ_j p_j e^{zσ(g_j,x)} φ(g_j x) on a circle grid.

    Attributes:
        grid: Node set and interpolation rule
        z: Twist parameter
        matrix: Sparse m×m complex matrix acting on grid functions
        measure: The step distribution
    """

    grid: CircleGrid
    z: complex
    matrix: sparse.csr_matrix
    measure: MeasureSpec

    def apply(self, values: np.ndarray) -> np.ndarray:
        return self.matrix @ values


def build_operator(mu: MeasureSpec, z: complex, grid: CircleGrid) -> TransferOperator:
    """
    Assemble the discretized twisted Markov operator.

    Row i holds, for each atom, p_j e^{zσ(g_j, x_i)} spread over the
    interpolation stencil of the angle of g_j x_i.

    Raises:
        DimensionError: If μ is not supported on 2×2 matrices
        PreconditionError: If |Re z| > 0.5
    """
    if mu.dimension != 2:
        raise DimensionError(f"Transfer operators need d = 2, got d = {mu.dimension}")
    z = complex(z)
    if abs(z.real) > MAX_REAL_PART:
        raise PreconditionError(f"|Re z| must be ≤ {MAX_REAL_PART}, got {z.real}")

    points = grid.points
    rows, cols, data = [], [], []
    for g, p in mu.atoms:
        moved, norms = act_rows(g, points)
        indices, w = grid.weights(angles_of(moved))
        factor = p * np.exp(z * np.log(norms))
        rows.append(np.repeat(np.arange(grid.m), w.shape[1]))
        cols.append(indices.ravel())
        data.append((factor[:, None] * w).ravel())

    matrix = sparse.coo_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(grid.m, grid.m),
        dtype=complex,
    ).tocsr()
    return TransferOperator(grid=grid, z=z, matrix=matrix, measure=mu)


@dataclass(frozen=True, eq=False)
class SpectralData:
    """
    Leading spectral data of a discretized P_z.

    Attributes:
        z: Twist parameter
        lambda_z: Leading eigenvalue
        r_z: Right eigenvector on the grid, normalized by ⟨ν̂, r_z⟩ = 1
        gap: |λ₂|/|λ_z| from one deflation step (NaN when not computed)
        nu_hat: Left eigenvector at z = 0, nonnegative with unit mass
        residual: ‖P_z r_z − λ_z r_z‖_∞ / |λ_z|
        iterations: Power iterations used for (λ_z, r_z)
        grid: The grid
        deflation_residual: Rayleigh residual of the deflated iterate (NaN when not computed)
    """

    z: complex
    lambda_z: complex
    r_z: np.ndarray
    gap: float
    nu_hat: np.ndarray
    residual: float
    iterations: int
    grid: CircleGrid
    deflation_residual: float = field(default=math.nan)

    @property
    def log_lambda(self) -> complex:
        return complex(np.log(self.lambda_z))

    def eigenfunction_at(self, angles: np.ndarray) -> np.ndarray:
        """r_z interpolated at arbitrary angles."""
        return self.grid.interpolate(self.r_z, angles)

    def nu_cdf(self, angles: np.ndarray) -> np.ndarray:
        """Distribution function of ν̂ on [0, π), mass of each node placed at the node."""
        cumulative = np.cumsum(self.nu_hat)
        positions = np.searchsorted(self.grid.angles, np.asarray(angles), side="right")
        return np.where(positions > 0, cumulative[np.maximum(positions - 1, 0)], 0.0)


# Number of (measure, grid) stationary vectors kept in memory.
NU_CACHE_SIZE = 32


@dataclass(frozen=True)
class _MeasureKey:
    """Cache key comparing measures by their atoms rather than by identity."""

    fingerprint: str
    measure: MeasureSpec = field(compare=False)


def stationary_vector(mu: MeasureSpec, grid: CircleGrid) -> np.ndarray:
    """
    Left eigenvector ν̂ of P_0: the discretized stationary measure.

    Raises:
        NoConvergenceError: After MAX_ITERATIONS transposed iterations
    """
    return _solve_stationary(_MeasureKey(mu.fingerprint, mu), grid)


@lru_cache(maxsize=NU_CACHE_SIZE)
def _solve_stationary(key: _MeasureKey, grid: CircleGrid) -> np.ndarray:
    transposed = build_operator(key.measure, 0.0, grid).matrix.real.T.tocsr()
    nu = np.full(grid.m, 1.0 / grid.m)
    for _ in range(MAX_ITERATIONS):
        updated = transposed @ nu
        updated = np.maximum(updated, 0.0)
        updated /= updated.sum()
        if np.abs(updated - nu).sum() <= 1e-13:
            nu = updated
            break
        nu = updated
    else:
        raise NoConvergenceError("Stationary vector did not converge")
    nu.flags.writeable = False
    return nu


def left_eigenvector(
    op: TransferOperator, lam: complex, right: np.ndarray, max_iterations: int = MAX_ITERATIONS
) -> np.ndarray:
    """
    Left eigenvector ℓ of P_z for λ_z, scaled so that Σ conj(ℓ_i) r_i = 1.

    conj(ℓ) is the row vector with conj(ℓ)·P_z = λ_z conj(ℓ); at z = 0 it is ν̂.

    Raises:
        NoConvergenceError: If the adjoint iteration hits max_iterations
    """
    adjoint = op.matrix.conj().T.tocsr()
    left = np.ones(op.grid.m, dtype=complex)
    left /= np.vdot(left, right)
    for _ in range(max_iterations):
        updated = adjoint @ left / np.conj(lam)
        updated /= np.vdot(updated, right).conjugate()
        if np.max(np.abs(updated - left)) <= 1e-12 * np.max(np.abs(updated)):
            return updated
        left = updated
    raise NoConvergenceError(f"Left eigenvector did not converge at z={op.z}")


def _second_modulus(
    op: TransferOperator, lam: complex, right: np.ndarray, max_iterations: int
) -> tuple[float, float]:
    """Estimate |λ₂| by iterating P_z with the leading eigenpair deflated."""
    matrix = op.matrix
    left = left_eigenvector(op, lam, right, max_iterations)

    def deflated(v: np.ndarray) -> np.ndarray:
        return matrix @ v - lam * right * np.vdot(left, v)

    rng = np.random.default_rng(0)
    v = rng.standard_normal(op.grid.m) + 0j
    v = v - right * np.vdot(left, v)
    v /= np.max(np.abs(v))
    logs: list[float] = []
    estimate = math.nan
    for k in range(1, GAP_MAX_ITERATIONS + 1):
        w = deflated(v)
        size = float(np.max(np.abs(w)))
        if size == 0.0:
            return 0.0, 0.0
        logs.append(math.log(size))
        v = w / size
        if k % GAP_CHECK_EVERY == 0:
            updated = math.exp(float(np.mean(logs[len(logs) // 2 :])))
            if math.isfinite(estimate) and abs(updated - estimate) <= GAP_TOLERANCE * updated:
                estimate = updated
                break
            estimate = updated
    w = deflated(v)
    rayleigh = np.vdot(v, w) / np.vdot(v, v)
    residual = float(np.max(np.abs(w - rayleigh * v)) / max(np.max(np.abs(v)), 1e-300))
    return estimate, residual


def leading_eigen(
    op: TransferOperator,
    tol: float = EIGEN_TOLERANCE,
    max_iterations: int = MAX_ITERATIONS,
    with_gap: bool = True,
    xi0: float = XI0_OP,
) -> SpectralData:
    """
    Leading eigenpair of P_z by power iteration, normalized against ν̂.

    Each step maps r ↦ P_z r / ⟨ν̂, P_z r⟩, which keeps ⟨ν̂, r⟩ = 1, and stops
    when ‖P_z r − λ r‖_∞ ≤ tol·|λ|. At z = 0 the constant function is an
    exact eigenvector with eigenvalue 1 whenever the rows sum to one.

    Args:
        op: Discretized operator
        tol: Relative residual tolerance
        max_iterations: Iteration cap
        with_gap: Also estimate |λ₂|/|λ_z| by deflation
        xi0: Largest accepted |Im z|

    Raises:
        PreconditionError: If |Im z| > xi0
        NoConvergenceError: If the iteration cap is reached
    """
    if abs(op.z.imag) > xi0:
        raise PreconditionError(f"|Im z| must be ≤ {xi0} for eigen-solves, got {op.z.imag}")
    nu = stationary_vector(op.measure, op.grid)
    matrix = op.matrix
    r = np.ones(op.grid.m, dtype=complex)

    lam = complex(math.nan)
    residual = math.inf
    iterations = 0
    if op.z == 0:
        row_sums = matrix @ r
        if np.max(np.abs(row_sums - 1.0)) <= 1e-12:
            lam, residual = 1.0 + 0j, float(np.max(np.abs(row_sums - 1.0)))

    if not math.isfinite(residual):
        for iterations in range(1, max_iterations + 1):
            w = matrix @ r
            lam = complex(nu @ w)
            if lam == 0:
                raise NoConvergenceError(f"Iteration collapsed at z={op.z}")
            residual = float(np.max(np.abs(w - lam * r)) / abs(lam))
            if residual <= tol:
                break
            r = w / lam
        else:
            raise NoConvergenceError(
                f"Power iteration did not converge at z={op.z} (residual {residual:.2e})"
            )
    logger.debug(f"leading_eigen z={op.z}: lambda={lam}, iterations={iterations}")

    gap, deflation_residual = math.nan, math.nan
    if with_gap:
        second, deflation_residual = _second_modulus(op, lam, r, max_iterations)
        gap = second / abs(lam)
    r.flags.writeable = False
    return SpectralData(
        z=op.z,
        lambda_z=lam,
        r_z=r,
        gap=gap,
        nu_hat=nu,
        residual=residual,
        iterations=iterations,
        grid=op.grid,
        deflation_residual=deflation_residual,
    )


def spectral_at(
    mu: MeasureSpec, z: complex, grid: CircleGrid, tol: float = EIGEN_TOLERANCE, with_gap=False
) -> SpectralData:
    """Build P_z and solve for its leading eigenpair."""
    return leading_eigen(build_operator(mu, z, grid), tol=tol, with_gap=with_gap)


def log_lambda(mu: MeasureSpec, grid: CircleGrid, s: float, tol: float = DERIVATIVE_TOLERANCE):
    """Λ(s) = log λ_s for real s."""
    return math.log(spectral_at(mu, s, grid, tol=tol).lambda_z.real)


@dataclass(frozen=True)
class CurvePoint:
    xi: float
    lambda_z: complex
    residual: float


def lambda_curve(mu: MeasureSpec, grid: CircleGrid, xi_values: Sequence[float]):
    """λ_{iξ} along a ξ-grid."""
    points = []
    for xi in xi_values:
        data = spectral_at(mu, 1j * xi, grid)
        points.append(CurvePoint(xi=float(xi), lambda_z=data.lambda_z, residual=data.residual))
    return tuple(points)


@dataclass(frozen=True)
class ExpansionReport:
    """Residuals of λ_{iξ} against its second-order expansion and their fitted order."""

    rows: tuple[tuple[float, complex, float], ...]
    order: float

    @property
    def passed(self) -> bool:
        return math.isfinite(self.order) and self.order >= 2.5


def lambda_expansion_check(
    mu: MeasureSpec,
    grid: CircleGrid,
    xi_grid: Sequence[float],
    gamma: float,
    rho2: float,
) -> ExpansionReport:
    """
    Check λ_{iξ} = 1 + iγξ − ((ϱ² + γ²)/2)ξ² + O(|ξ|³).

    Raises:
        PreconditionError: Unless xi_grid has ≥ 8 values with 0 < |ξ| ≤ 0.3
    """
    xi = np.asarray(xi_grid, dtype=float)
    if xi.size < 8 or np.any(xi == 0.0) or np.any(np.abs(xi) > 0.3):
        raise PreconditionError("xi_grid needs at least 8 values in [-0.3, 0.3] without 0")
    rows = []
    for value in xi:
        lam = spectral_at(mu, 1j * value, grid, tol=DERIVATIVE_TOLERANCE).lambda_z
        expansion = 1.0 + 1j * gamma * value - 0.5 * (rho2 + gamma**2) * value**2
        rows.append((float(value), lam, float(abs(lam - expansion))))
    residuals = np.array([r[2] for r in rows])
    usable = residuals > 0.0
    fit = fit_line(np.log(np.abs(xi[usable])), np.log(residuals[usable]))
    return ExpansionReport(rows=tuple(rows), order=fit.slope)


def _central_weights(order: int, derivative: int) -> np.ndarray:
    """Weights w_k, k = −order..order, with Σ w_k f(kh) ≈ h^derivative f^{(derivative)}(0)."""
    nodes = np.arange(-order, order + 1, dtype=float)
    powers = np.arange(nodes.size)
    system = nodes[None, :] ** powers[:, None] / np.array(
        [math.factorial(int(p)) for p in powers]
    )[:, None]
    rhs = np.zeros(nodes.size)
    rhs[derivative] = 1.0
    return np.linalg.solve(system, rhs)


@dataclass(frozen=True)
class LambdaDerivatives:
    """
    Derivatives γ_m = Λ^{(m)}(0), m = 1..order.

    Attributes:
        gammas: Richardson-extrapolated estimates
        errors: Step-halving error estimates
        ill_conditioned: Per-derivative flag, error above 10% of the value
        h: Base step
    """

    gammas: tuple[float, ...]
    errors: tuple[float, ...]
    ill_conditioned: tuple[bool, ...]
    h: float


def lambda_real_derivatives(
    mu: MeasureSpec, grid: CircleGrid, order: int = 5, h: float = DEFAULT_DERIVATIVE_STEP
) -> LambdaDerivatives:
    """
    Central finite differences of Λ(s) = log λ_s with Richardson extrapolation.

    Λ is evaluated on the stencils s = kh and s = kh/2, k = −order..order.

    Raises:
        PreconditionError: Unless 1 ≤ order ≤ 5 and h ∈ [1e-3, 5e-2]
    """
    if not 1 <= order <= 5:
        raise PreconditionError(f"order must be in 1..5, got {order}")
    if not 1e-3 <= h <= 5e-2:
        raise PreconditionError(f"h must be in [1e-3, 5e-2], got {h}")

    def samples(step: float) -> np.ndarray:
        return np.array([log_lambda(mu, grid, k * step) for k in range(-order, order + 1)])

    coarse, fine = samples(h), samples(h / 2.0)
    gammas, errors, flags = [], [], []
    for m in range(1, order + 1):
        weights = _central_weights(order, m)
        d_coarse = float(weights @ coarse) / h**m
        d_fine = float(weights @ fine) / (h / 2.0) ** m
        # Symmetric stencils leave only even powers of h in the error.
        p = 2 * order + 1 - m if m % 2 else 2 * order + 2 - m
        extrapolated = d_fine + (d_fine - d_coarse) / (2.0**p - 1.0)
        error = abs(d_fine - d_coarse)
        ill = error > 0.1 * abs(extrapolated) and error > 1e-8
        if ill:
            logger.warning(f"Λ^({m})(0) is ill-conditioned: {extrapolated:.4g} ± {error:.2g}")
        gammas.append(extrapolated)
        errors.append(error)
        flags.append(ill)
    return LambdaDerivatives(
        gammas=tuple(gammas), errors=tuple(errors), ill_conditioned=tuple(flags), h=h
    )


def cramer_zeta(gammas: Sequence[float], t: float) -> float:
    """
    Cramér series ζ(t) truncated after the quadratic term.

    ζ(t) = γ₃/(6γ₂^{3/2}) + (γ₄γ₂ − 3γ₃²)/(24γ₂³)·t
           + (γ₅γ₂² − 10γ₄γ₃γ₂ + 15γ₃³)/(120γ₂^{9/2})·t²

    Args:
        gammas: (γ₂, γ₃, γ₄, γ₅)
        t: Argument, small

    Raises:
        DegenerateVarianceError: If γ₂ ≤ 0
    """
    g2, g3, g4, g5 = (list(gammas) + [0.0, 0.0, 0.0])[:4]
    if g2 <= 0.0:
        raise DegenerateVarianceError(f"gamma_2 must be positive, got {g2}")
    c0 = g3 / (6.0 * g2**1.5)
    c1 = (g4 * g2 - 3.0 * g3**2) / (24.0 * g2**3)
    c2 = (g5 * g2**2 - 10.0 * g4 * g3 * g2 + 15.0 * g3**3) / (120.0 * g2**4.5)
    return c0 + c1 * t + c2 * t * t


def _check_real_tilt(spectral_s: SpectralData) -> float:
    s = spectral_s.z
    if s.imag != 0.0 or abs(s.real) > MAX_REAL_PART:
        raise PreconditionError(f"Tilt parameter must be real with |s| ≤ 0.5, got {s}")
    return s.real


def tilt_weights(
    mu: MeasureSpec, spectral_s: SpectralData, walk: WalkRecord, x0: ProjPoint
) -> float:
    """
    Change-of-measure density q_n^s = e^{sσ}/λ_s^n · r_s(S_n x)/r_s(x).

    Averages to one over untilted walks.
    """
    s = _check_real_tilt(spectral_s)
    if s == 0.0 and spectral_s.lambda_z == 1.0:
        return 1.0
    ratio = spectral_s.eigenfunction_at(np.array([walk.x_end.angle, x0.angle]))
    log_q = s * walk.sigma - walk.n * math.log(spectral_s.lambda_z.real)
    return float(math.exp(log_q) * ratio[0].real / ratio[1].real)


def tilt_weights_batch(spectral_s: SpectralData, batch: WalkBatch, x0: ProjPoint) -> np.ndarray:
    """q_n^s for every trial of a batch."""
    s = _check_real_tilt(spectral_s)
    r_end = spectral_s.eigenfunction_at(angles_of(batch.x_end)).real
    r_start = spectral_s.eigenfunction_at(np.array([x0.angle]))[0].real
    log_q = s * batch.sigma - batch.n * math.log(spectral_s.lambda_z.real)
    return np.exp(log_q) * r_end / r_start


@dataclass(frozen=True)
class SCGFReport:
    """(1/n) log E e^{sσ_n} by Monte Carlo against log λ_s."""

    s: float
    n: int
    monte_carlo: float
    transfer: float
    stderr: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return abs(self.monte_carlo - self.transfer) <= self.tolerance


def scgf_check(
    mu: MeasureSpec,
    x0: ProjPoint,
    s: float,
    n: int,
    trials: int,
    spectral_s: SpectralData,
    seed: int,
    threads: int = 1,
) -> SCGFReport:
    """
    Compare the scaled cumulant generating function with log λ_s.

    Agreement is required within max(3·stderr, 2/n).

    Raises:
        PreconditionError: If |s| > 0.3 or n < 1
    """
    if abs(s) > 0.3:
        raise PreconditionError(f"|s| must be ≤ 0.3, got {s}")
    if n < 1 or trials < 2:
        raise PreconditionError("Need n ≥ 1 and at least 2 trials")
    batch = run_walks(mu, x0, n, trials, seed, threads=threads)
    exponents = s * batch.sigma
    log_mean = float(logsumexp(exponents) - math.log(trials))
    scaled = np.exp(exponents - exponents.max())
    rel_stderr = float(scaled.std(ddof=1) / (scaled.mean() * math.sqrt(trials)))
    stderr = rel_stderr / n
    transfer_value = math.log(spectral_s.lambda_z.real)
    return SCGFReport(
        s=s,
        n=n,
        monte_carlo=log_mean / n,
        transfer=transfer_value,
        stderr=stderr,
        tolerance=max(3.0 * stderr, 2.0 / n),
    )


@dataclass(frozen=True)
class DecayReport:
    """
    Sup norms ‖P_{iξ}^n 1‖_∞ and their fitted geometric rate.

    Attributes:
        xi: Frequency
        rows: (n, norm) pairs
        rho_hat: exp of the fitted slope of log-norm against n (NaN with < 2 horizons)
        decay_fails: True when ρ̂ is not below 1 (arithmetic behaviour)
    """

    xi: float
    rows: tuple[tuple[int, float], ...]
    rho_hat: float

    @property
    def decay_fails(self) -> bool:
        return not (math.isfinite(self.rho_hat) and self.rho_hat < 1.0 - 1e-3)


def large_xi_decay(
    mu: MeasureSpec, grid: CircleGrid, xi: float, n_list: Sequence[int]
) -> DecayReport:
    """
    Decay of iterates of P_{iξ} away from ξ = 0.

    Raises:
        PreconditionError: Unless 0.5 ≤ |ξ| ≤ 20
    """
    if not 0.5 <= abs(xi) <= 20.0:
        raise PreconditionError(f"|xi| must be in [0.5, 20], got {xi}")
    op = build_operator(mu, 1j * xi, grid)
    wanted = sorted(set(int(n) for n in n_list))
    norms: dict[int, float] = {}
    v = np.ones(grid.m, dtype=complex)
    step = 0
    for n in wanted:
        while step < n:
            v = op.apply(v)
            step += 1
        norms[n] = float(np.max(np.abs(v)))
    rows = tuple((n, norms[n]) for n in wanted)
    usable = [(n, value) for n, value in rows if n > 0 and value > 0.0]
    fit = fit_line(np.array([n for n, _ in usable]), np.log([v for _, v in usable]))
    rho_hat = math.exp(fit.slope) if math.isfinite(fit.slope) else math.nan
    report = DecayReport(xi=float(xi), rows=rows, rho_hat=rho_hat)
    if report.decay_fails and len(usable) >= 2:
        logger.warning(f"No decay of P_(i·{xi})^n: rho_hat={rho_hat:.6f} (arithmetic measure?)")
    return report


@dataclass(frozen=True)
class EigenvalueBoundRow:
    xi: float
    modulus_power: float
    bound: float

    @property
    def passed(self) -> bool:
        return self.modulus_power <= self.bound


def eigenvalue_bound_check(
    mu: MeasureSpec, grid: CircleGrid, n: int, xi_values: Sequence[float], rho2: float
) -> tuple[EigenvalueBoundRow, ...]:
    """
    Check |λ_{iξ/√n}|^n ≤ e^{−ϱ²ξ²/3} for ξ in the perturbative window.

    Raises:
        PreconditionError: If some |ξ|/√n exceeds the operational window
    """
    root = math.sqrt(n)
    if any(abs(xi) / root > XI0_OP for xi in xi_values):
        raise PreconditionError("Some xi/sqrt(n) falls outside the perturbative window")
    rows = []
    for xi in xi_values:
        lam = spectral_at(mu, 1j * xi / root, grid).lambda_z
        rows.append(
            EigenvalueBoundRow(
                xi=float(xi),
                modulus_power=abs(lam) ** n,
                bound=math.exp(-rho2 * xi * xi / 3.0),
            )
        )
    return tuple(rows)


class TiltedSampler:
    """
    Step reweighting for the tilted chain at real s.

    From x the chain moves by g_j with probability proportional to
    p_j e^{sσ(g_j,x)} r_s(g_j x). Its stationary law is the tilted measure π_s.
    """

    def __init__(self, mu: MeasureSpec, spectral_s: SpectralData):
        self.s = _check_real_tilt(spectral_s)
        self.mu = mu
        self.spectral = spectral_s

    def step_weights(self, states: np.ndarray) -> np.ndarray:
        weights = np.empty((states.shape[0], self.mu.size))
        for j, (g, p) in enumerate(self.mu.atoms):
            moved, norms = act_rows(g, states)
            r_next = self.spectral.eigenfunction_at(angles_of(moved)).real
            weights[:, j] = p * norms**self.s * r_next
        return weights


def solve_tilt(
    mu: MeasureSpec,
    grid: CircleGrid,
    gamma1: float,
    target_shift: float,
    bracket: tuple[float, float] = (-MAX_REAL_PART, MAX_REAL_PART),
) -> float:
    """
    Real s with Λ′(s) − Λ′(0) = target_shift.

    Λ′ is a central difference of Λ with step 1e-4; the root is bracketed
    by Brent's method.

    Raises:
        PreconditionError: If the target is not attained inside the bracket
    """
    if target_shift == 0.0:
        return 0.0
    step = 1e-4
    lo, hi = bracket[0] + step, bracket[1] - step

    def excess(s: float) -> float:
        slope = (log_lambda(mu, grid, s + step) - log_lambda(mu, grid, s - step)) / (2 * step)
        return slope - gamma1 - target_shift

    f_lo, f_hi = excess(lo), excess(hi)
    if f_lo * f_hi > 0.0:
        raise PreconditionError(f"Shift {target_shift} is not reachable with |s| < 0.5")
    return float(optimize.brentq(excess, lo, hi, xtol=1e-12))

# ABOUTME: Monte Carlo engine for products of i.i.d. random matrices S_n = g_n⋯g_1
# ABOUTME: Counter-based streams, renormalized cocycles, γ/ϱ², ν, regularity and LDT probes

import hashlib
import logging
import math
from collections.abc import Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import IntEnum
from functools import cached_property
from typing import Protocol

import numpy as np

from cocyclelab.errors import InsufficientMassError, MeasureError, PreconditionError
from cocyclelab.projgeom import (
    DualProjPoint,
    GroupElement,
    ProjPoint,
    ProjSample,
    as_reps,
    canonicalize_rows,
)
from cocyclelab.stats import batch_means, batch_statistic_stderr, fit_line, wilson_interval

logger = logging.getLogger(__name__)

# Trials are simulated in blocks of this many walks. Block b always draws from
# the stream keyed by (seed, b), so the block layout, not the thread count,
# determines every random number.
BLOCK_SIZE = 4096

# Below this value of the sample variance per step the measure is reported as
# degenerate (e.g. a single scalar atom).
DEGENERATE_VARIANCE = 1e-12

# Exact enumeration is limited to this many words.
MAX_ENUMERATED_WORDS = 1 << 22

# Fewest stationary samples the largest ball around H_y must hold for a regularity fit.
MIN_BALL_COUNT = 50


class StreamPurpose(IntEnum):
    """Disjoint stream families derived from one user seed."""

    WALK = 0
    BATCH = 1
    STATIONARY = 2
    PAIRS = 3
    PROXIMALITY = 4


def stream(seed: int, purpose: StreamPurpose, index: int) -> np.random.Generator:
    """
    Counter-based random stream keyed by (seed, purpose, index).

    Uses the Philox generator with a 128-bit key: the seed fills the high
    64 bits, the purpose and index the low 64 bits.

    Raises:
        PreconditionError: If the seed is outside [0, 2⁶⁴) or the index is negative
    """
    if not 0 <= seed < 2**64:
        raise PreconditionError(f"Seed must be in [0, 2^64), got {seed}")
    if not 0 <= index < 2**56:
        raise PreconditionError(f"Stream index out of range: {index}")
    key = (seed << 64) | (int(purpose) << 56) | index
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True, eq=False)
class MeasureSpec:
    """
    Finitely supported probability measure μ = Σ p_j δ_{g_j} on GL_d(ℝ).

    Attributes:
        atoms: Pairs (g_j, p_j) with p_j > 0 and Σ p_j = 1
    """

    atoms: tuple[tuple[GroupElement, float], ...]

    def __post_init__(self):
        if not self.atoms:
            raise MeasureError("A measure needs at least one atom")
        dims = {g.dimension for g, _ in self.atoms}
        if len(dims) != 1:
            raise MeasureError(f"Atoms have mixed dimensions: {sorted(dims)}")
        weights = [p for _, p in self.atoms]
        if any(not math.isfinite(p) or p <= 0.0 for p in weights):
            raise MeasureError(f"Atom probabilities must be positive, got {weights}")
        total = math.fsum(weights)
        if abs(total - 1.0) > 1e-12:
            raise MeasureError(f"Atom probabilities must sum to 1, got {total!r}")

    @classmethod
    def from_literal(cls, atoms: Sequence[Mapping | tuple]) -> "MeasureSpec":
        """
        Build a measure from row-major literals.

        Args:
            atoms: Items {"matrix": [[...], ...], "p": weight} or (matrix, weight) pairs

        Raises:
            MeasureError: On malformed matrices or weights
        """
        pairs = []
        for item in atoms:
            if isinstance(item, Mapping):
                matrix, weight = item["matrix"], item["p"]
            else:
                matrix, weight = item
            pairs.append((GroupElement.from_matrix(matrix), float(weight)))
        return cls(atoms=tuple(pairs))

    @classmethod
    def of(cls, *pairs: tuple[GroupElement, float]) -> "MeasureSpec":
        return cls(atoms=tuple(pairs))

    @property
    def dimension(self) -> int:
        return self.atoms[0][0].dimension

    @property
    def size(self) -> int:
        return len(self.atoms)

    @cached_property
    def stack(self) -> np.ndarray:
        """Atom matrices as one (K, d, d) array."""
        return np.stack([g.entries for g, _ in self.atoms])

    @cached_property
    def probabilities(self) -> np.ndarray:
        return np.array([p for _, p in self.atoms])

    @cached_property
    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.probabilities)

    @cached_property
    def fingerprint(self) -> str:
        """SHA-256 over atom entries and weights."""
        digest = hashlib.sha256()
        for g, p in self.atoms:
            digest.update(np.ascontiguousarray(g.entries).tobytes())
            digest.update(np.float64(p).tobytes())
        return digest.hexdigest()

    @property
    def max_log_norm(self) -> float:
        """max_j log N(g_j), the deterministic bound on |σ(g_j, x)|."""
        return max(g.log_norm_n for g, _ in self.atoms)

    def draw(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """Atom indices for `count` independent draws from μ."""
        idx = np.searchsorted(self.cumulative, rng.random(count), side="right")
        return np.minimum(idx, self.size - 1)


@dataclass(frozen=True)
class WalkRecord:
    """One trajectory summary: σ(S_n, x0) and S_n x0."""

    n: int
    sigma: float
    x_end: ProjPoint
    seed: int


@dataclass(frozen=True, eq=False)
class WalkBatch:
    """
    Vectorized outcome of many independent walks of the same length.

    Attributes:
        n: Steps per walk (after burn-in)
        seed: User seed the streams were keyed by
        sigma: σ(S_n, x) per trial
        x_end: Canonical representatives of S_n x, one row per trial
        log_weight: Log likelihood ratio dμ^{⊗n}/dQ per trial for tilted runs, else None
    """

    n: int
    seed: int
    sigma: np.ndarray
    x_end: np.ndarray
    log_weight: np.ndarray | None = None

    @property
    def trials(self) -> int:
        return int(self.sigma.shape[0])

    def record(self, trial: int) -> WalkRecord:
        return WalkRecord(
            n=self.n,
            sigma=float(self.sigma[trial]),
            x_end=ProjPoint(rep=tuple(float(c) for c in self.x_end[trial])),
            seed=self.seed,
        )


@dataclass(frozen=True)
class LyapunovEstimate:
    """Monte Carlo estimates of γ and ϱ² with batch-means standard errors."""

    gamma_hat: float
    rho2_hat: float
    stderr_gamma: float
    stderr_rho2: float
    trials: int
    horizon: int
    degenerate: bool = False


class StepTilt(Protocol):
    """Reweights atom choices along a walk; used for importance sampling."""

    def step_weights(self, states: np.ndarray) -> np.ndarray:
        """Nonnegative unnormalized weights of shape (count, K) for walkers at `states`."""
        ...


def run_walk(mu: MeasureSpec, x0: ProjPoint, n: int, seed: int) -> WalkRecord:
    """
    Simulate one trajectory and accumulate the cocycle with per-step renormalization.

    Args:
        mu: Step distribution
        x0: Starting point
        n: Number of steps (≥ 0)
        seed: Stream seed

    Returns:
        WalkRecord with sigma = Σ σ(g_k, x_{k-1}) and x_end = x_n

    Raises:
        PreconditionError: If n < 0 or the dimensions disagree
    """
    if n < 0:
        raise PreconditionError(f"n must be ≥ 0, got {n}")
    if x0.dimension != mu.dimension:
        raise PreconditionError("Starting point and measure have different dimensions")
    choices = mu.draw(stream(seed, StreamPurpose.WALK, 0), n)
    stack = mu.stack
    v = x0.vector
    sigma = 0.0
    for j in choices:
        w = stack[j] @ v
        norm = float(np.linalg.norm(w))
        sigma += math.log(norm)
        v = w / norm
    return WalkRecord(n=n, sigma=sigma, x_end=ProjPoint.from_vector(v), seed=seed)


def _run_block(
    mu: MeasureSpec,
    start: np.ndarray,
    n: int,
    count: int,
    rng: np.random.Generator,
    burnin: int,
    tilt: StepTilt | None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray | None]:
    stack = mu.stack
    states = np.tile(start, (count, 1))
    sigma = np.zeros(count)
    log_weight = np.zeros(count) if tilt is not None else None
    rows = np.arange(count)
    log_p = np.log(mu.probabilities)

    for step in range(burnin + n):
        measuring = step >= burnin
        if tilt is not None and measuring:
            weights = np.maximum(tilt.step_weights(states), np.finfo(float).tiny)
            probs = weights / weights.sum(axis=1, keepdims=True)
            cum = np.cumsum(probs, axis=1)
            idx = np.minimum((rng.random(count)[:, None] > cum).sum(axis=1), mu.size - 1)
            log_weight += log_p[idx] - np.log(probs[rows, idx])
        else:
            idx = mu.draw(rng, count)
        moved = np.einsum("tij,tj->ti", stack[idx], states)
        norms = np.linalg.norm(moved, axis=1)
        if measuring:
            sigma += np.log(norms)
        states = moved / norms[:, None]
    return sigma, states, log_weight


def run_walks(
    mu: MeasureSpec,
    x0: ProjPoint,
    n: int,
    trials: int,
    seed: int,
    threads: int = 1,
    burnin: int = 0,
    tilt: StepTilt | None = None,
) -> WalkBatch:
    """
    Simulate `trials` independent walks of length n, vectorized by block.

    Blocks of BLOCK_SIZE trials are dispatched over a thread pool and
    concatenated in block order, so the result is identical for every
    thread count.

    Args:
        mu: Step distribution
        x0: Common starting point
        n: Steps accumulated into σ
        trials: Number of walks
        seed: Stream seed
        threads: Worker threads
        burnin: Unrecorded steps taken before accumulation starts
        tilt: Optional reweighting of the recorded steps (importance sampling)

    Returns:
        WalkBatch with per-trial σ, end points and, for tilted runs, log weights
    """
    if n < 0 or trials < 0 or burnin < 0:
        raise PreconditionError("n, trials and burnin must be nonnegative")
    if x0.dimension != mu.dimension:
        raise PreconditionError("Starting point and measure have different dimensions")

    start = x0.vector
    sizes = [min(BLOCK_SIZE, trials - b * BLOCK_SIZE) for b in range(-(-trials // BLOCK_SIZE))]

    def block(b: int):
        rng = stream(seed, StreamPurpose.BATCH, b)
        return _run_block(mu, start, n, sizes[b], rng, burnin, tilt)

    if threads > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(block, range(len(sizes))))
    else:
        parts = [block(b) for b in range(len(sizes))]

    d = mu.dimension
    sigma = np.concatenate([p[0] for p in parts]) if parts else np.zeros(0)
    ends = np.concatenate([p[1] for p in parts]) if parts else np.zeros((0, d))
    log_weight = None
    if tilt is not None:
        log_weight = np.concatenate([p[2] for p in parts]) if parts else np.zeros(0)
    if ends.shape[0]:
        ends = canonicalize_rows(ends)
    return WalkBatch(n=n, seed=seed, sigma=sigma, x_end=ends, log_weight=log_weight)


def estimate_gamma_rho2(
    mu: MeasureSpec,
    x0: ProjPoint,
    n: int,
    trials: int,
    seed: int,
    threads: int = 1,
    burnin: int = 0,
) -> LyapunovEstimate:
    """
    Estimate the Lyapunov exponent γ and the CLT variance ϱ² at horizon n.

    gamma_hat = mean(σ)/n and rho2_hat = var(σ)/n, with batch-means
    standard errors over contiguous trial batches. A burn-in starts the
    recorded walk close to the stationary law.

    Raises:
        PreconditionError: If n < 100 or trials < 100
    """
    if n < 100 or trials < 100:
        raise PreconditionError(f"Need n ≥ 100 and trials ≥ 100, got n={n}, trials={trials}")

    batch = run_walks(mu, x0, n, trials, seed, threads=threads, burnin=burnin)
    gamma_hat, stderr_gamma = batch_means(batch.sigma / n)
    rho2_hat = float(np.var(batch.sigma, ddof=1) / n)
    stderr_rho2 = batch_statistic_stderr(batch.sigma, lambda c: np.var(c, ddof=1) / n)
    degenerate = rho2_hat < DEGENERATE_VARIANCE
    if degenerate:
        logger.warning(
            f"Degenerate variance (rho2_hat={rho2_hat:.3e}): the measure looks arithmetic"
        )
    logger.info(
        f"gamma_hat={gamma_hat:.6f}±{stderr_gamma:.2e}, rho2_hat={rho2_hat:.6f}±{stderr_rho2:.2e}"
    )
    return LyapunovEstimate(
        gamma_hat=gamma_hat,
        rho2_hat=max(rho2_hat, 0.0),
        stderr_gamma=stderr_gamma,
        stderr_rho2=stderr_rho2,
        trials=trials,
        horizon=n,
        degenerate=degenerate,
    )


def empirical_stationary(
    mu: MeasureSpec, x0: ProjPoint, burnin: int, samples: int, seed: int
) -> ProjSample:
    """
    Points x_{burnin+1}, …, x_{burnin+samples} of one trajectory.

    Their empirical law approximates the stationary measure ν.

    Raises:
        PreconditionError: If burnin < 1000
    """
    if burnin < 1000:
        raise PreconditionError(f"burnin must be ≥ 1000, got {burnin}")
    if samples < 1:
        raise PreconditionError("samples must be positive")
    choices = mu.draw(stream(seed, StreamPurpose.STATIONARY, 0), burnin + samples)
    stack = mu.stack
    v = x0.vector
    out = np.empty((samples, mu.dimension))
    for k, j in enumerate(choices):
        v = stack[j] @ v
        v = v / math.sqrt(float(v @ v))
        if k >= burnin:
            out[k - burnin] = v
    return ProjSample(out)


@dataclass(frozen=True)
class RegularityFit:
    """
    Power-law fit ν̂(𝔹(H_y, r)) ≈ c_hat·r^eta_hat.

    Attributes:
        eta_hat: Fitted exponent
        c_hat: Fitted constant
        r_squared: Coefficient of determination of the log-log fit
        radii: Radii used
        masses: Empirical ball masses ν̂(𝔹(H_y, r))
        degenerate: True when some ball was empty and had to be left out
    """

    eta_hat: float
    c_hat: float
    r_squared: float
    radii: tuple[float, ...]
    masses: tuple[float, ...]
    degenerate: bool


def regularity_fit(
    nu_samples: Sequence[ProjPoint], y: DualProjPoint, radii: Sequence[float]
) -> RegularityFit:
    """
    Fit the regularity exponent of ν around the hyperplane H_y.

    Args:
        nu_samples: Approximate samples from ν
        y: Dual point defining H_y
        radii: Ball radii in (0, 1], at least 4 spanning two decades

    Returns:
        RegularityFit; degenerate when empty balls were excluded

    Raises:
        PreconditionError: If the radii do not meet the requirements
        InsufficientMassError: If fewer than 50 samples fall in the largest ball
    """
    radii_arr = np.sort(np.asarray(radii, dtype=float))
    if radii_arr.size < 4 or radii_arr[0] <= 0.0 or radii_arr[-1] > 1.0:
        raise PreconditionError("Need at least 4 radii in (0, 1]")
    if radii_arr[-1] / radii_arr[0] < 100.0 * (1.0 - 1e-12):
        raise PreconditionError("Radii must span at least two decades")

    reps = as_reps(nu_samples)
    total = reps.shape[0]
    distances = np.abs(reps @ y.vector) if total else np.zeros(0)
    counts = np.array([int(np.count_nonzero(distances < r)) for r in radii_arr])
    if total == 0 or counts[-1] < MIN_BALL_COUNT:
        raise InsufficientMassError(
            f"Only {int(counts[-1]) if total else 0} samples in the largest ball "
            f"(need {MIN_BALL_COUNT})"
        )

    masses = counts / total
    positive = counts > 0
    degenerate = not bool(np.all(positive))
    fit = fit_line(np.log(radii_arr[positive]), np.log(masses[positive]))
    if degenerate:
        empty = int(np.count_nonzero(~positive))
        logger.warning(f"Regularity fit is degenerate: {empty} of {radii_arr.size} balls are empty")
    return RegularityFit(
        eta_hat=fit.slope,
        c_hat=math.exp(fit.intercept) if math.isfinite(fit.intercept) else math.nan,
        r_squared=fit.r_squared,
        radii=tuple(float(r) for r in radii_arr),
        masses=tuple(float(m) for m in masses),
        degenerate=degenerate,
    )


@dataclass(frozen=True)
class ProbeRow:
    """One row of a tail probe: hits among trials and the Wilson bounds."""

    n: int
    hits: int
    trials: int
    p_hat: float
    p_lower: float
    p_upper: float


@dataclass(frozen=True)
class LDTReport:
    """Large-deviation probe of |σ(S_n,x) − nγ| ≥ nε over a list of horizons."""

    epsilon: float
    rows: tuple[ProbeRow, ...]
    slope: float

    @property
    def decaying(self) -> bool:
        return math.isfinite(self.slope) and self.slope < 0.0


def probe_row(n: int, hits: int, trials: int, confidence: float = 0.95) -> ProbeRow:
    lower, upper = wilson_interval(hits, trials, confidence)
    return ProbeRow(
        n=n,
        hits=hits,
        trials=trials,
        p_hat=hits / trials if trials else 0.0,
        p_lower=lower,
        p_upper=upper,
    )


def ldt_probe(
    mu: MeasureSpec,
    x0: ProjPoint,
    gamma: float,
    epsilon: float,
    n_list: Sequence[int],
    trials: int,
    seed: int,
    threads: int = 1,
) -> LDTReport:
    """
    Monte Carlo probabilities of the large deviation event |σ(S_n, x) − nγ| ≥ nε.

    The decay slope is fitted to log p_hat against n over the horizons with
    at least one hit; empty horizons carry only their Wilson upper bound.

    Raises:
        PreconditionError: If epsilon ≤ 0
    """
    if epsilon <= 0.0:
        raise PreconditionError(f"epsilon must be positive, got {epsilon}")
    rows = []
    for n in n_list:
        if n == 0 or trials == 0:
            rows.append(probe_row(n, 0, trials))
            continue
        batch = run_walks(mu, x0, n, trials, seed, threads=threads)
        hits = int(np.count_nonzero(np.abs(batch.sigma - n * gamma) >= n * epsilon))
        rows.append(probe_row(n, hits, trials))

    usable = [r for r in rows if r.hits > 0 and r.n > 0]
    fit = fit_line(np.array([r.n for r in usable]), np.log([r.p_hat for r in usable]))
    return LDTReport(epsilon=epsilon, rows=tuple(rows), slope=fit.slope)


def enumerate_words(mu: MeasureSpec, x0: ProjPoint, n: int) -> tuple[np.ndarray, np.ndarray]:
    """
    Exact law of σ(S_n, x0): one entry per word g_{j_n}⋯g_{j_1}.

    Returns:
        (sigma, probability) arrays of length K^n

    Raises:
        PreconditionError: If K^n exceeds MAX_ENUMERATED_WORDS
    """
    if n < 0 or mu.size**n > MAX_ENUMERATED_WORDS:
        raise PreconditionError(f"Cannot enumerate {mu.size}^{n} words")
    states = x0.vector[None, :]
    sigma = np.zeros(1)
    prob = np.ones(1)
    for _ in range(n):
        moved = np.einsum("kij,tj->tki", mu.stack, states).reshape(-1, mu.dimension)
        norms = np.linalg.norm(moved, axis=1)
        sigma = np.repeat(sigma, mu.size) + np.log(norms)
        prob = np.repeat(prob, mu.size) * np.tile(mu.probabilities, prob.size)
        states = moved / norms[:, None]
    return sigma, prob


def exact_ldt_probability(
    mu: MeasureSpec, x0: ProjPoint, gamma: float, epsilon: float, n: int
) -> float:
    """Exact P(|σ(S_n, x0) − nγ| ≥ nε) by enumeration; zero at n = 0."""
    if n == 0:
        return 0.0
    sigma, prob = enumerate_words(mu, x0, n)
    return float(prob[np.abs(sigma - n * gamma) >= n * epsilon].sum())


@dataclass(frozen=True)
class ProximalityReport:
    """
    Top Lyapunov spectrum of one long product and the growth of its top gap.

    Attributes:
        exponents: Estimated Lyapunov exponents, largest first
        log_gap_half: log(s₁/s₂) of the product after n/2 steps
        log_gap_full: log(s₁/s₂) of the product after n steps
        growing: True when the gap kept growing over the second half
    """

    exponents: tuple[float, ...]
    log_gap_half: float
    log_gap_full: float
    growing: bool


def proximality_gap(mu: MeasureSpec, n: int, seed: int) -> ProximalityReport:
    """
    Diagnose proximality from the singular value gap of a long product.

    Accumulates log|diag R| of repeated QR re-orthogonalizations of S_n. The
    check is a diagnostic only: a non-growing gap is logged as a warning.
    """
    if n < 2:
        raise PreconditionError("Need at least 2 steps")
    choices = mu.draw(stream(seed, StreamPurpose.PROXIMALITY, 0), n)
    q = np.eye(mu.dimension)
    acc = np.zeros(mu.dimension)
    half = None
    for k, j in enumerate(choices, start=1):
        q, r = np.linalg.qr(mu.stack[j] @ q)
        acc += np.log(np.abs(np.diag(r)))
        if k == n // 2:
            half = acc.copy()
    # QR diagonals are not ordered; sort to read off the top two.
    full_sorted = np.sort(acc)[::-1]
    half_sorted = np.sort(half)[::-1]
    log_gap_full = float(full_sorted[0] - full_sorted[1])
    log_gap_half = float(half_sorted[0] - half_sorted[1])
    growing = log_gap_full > log_gap_half + 1.0
    if not growing:
        logger.warning(
            f"Top singular value gap is not growing ({log_gap_half:.3f} -> {log_gap_full:.3f}); "
            "the measure may not be proximal"
        )
    return ProximalityReport(
        exponents=tuple(float(e) for e in full_sorted / n),
        log_gap_half=log_gap_half,
        log_gap_full=log_gap_full,
        growing=growing,
    )

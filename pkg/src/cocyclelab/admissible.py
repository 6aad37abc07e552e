# ABOUTME: Admissible target functions u on projective space and their empirical checks
# ABOUTME: Constructors, tail and Hölder property checks, partition of unity, tail LDT probes

import logging
import math
from collections.abc import Callable, Iterator, Sequence
from dataclasses import dataclass, replace
from typing import Literal

import numpy as np

from cocyclelab.errors import PreconditionError, SingularInputError
from cocyclelab.projgeom import (
    DualProjPoint,
    Extended,
    ExtendedReal,
    ProjPoint,
    ProjSample,
    as_reps,
    canonicalize_rows,
)
from cocyclelab.randwalk import (
    MeasureSpec,
    ProbeRow,
    RegularityFit,
    StepTilt,
    StreamPurpose,
    probe_row,
    regularity_fit,
    run_walks,
    stream,
)
from cocyclelab.stats import wilson_interval

logger = logging.getLogger(__name__)

# Points with δ(x, y) below this value are treated as lying on H_y.
SINGULAR_FLOOR = 1e-300

# Half-width of the flat top of the base bump χ̃.
BUMP_PLATEAU = 0.1

# Level sets whose bumps are compared for Hölder growth.
HOLDER_K_RANGE = range(-10, 11)

# Largest accepted ratio between the worst normalized Hölder ratio and the one at k = 0.
HOLDER_UNIFORM_BOUND = 10.0

MIN_PROPERTY1_SAMPLES = 10_000

Evaluator = Callable[[np.ndarray], np.ma.MaskedArray]


@dataclass(frozen=True)
class SingularSet:
    """Where an admissible function takes infinite values."""

    kind: Literal["empty", "hyperplane", "custom"]
    dual: DualProjPoint | None = None


@dataclass(frozen=True, eq=False)
class AdmissibleFn:
    """
    A function u: ℙ^{d-1} → ℝ ∪ {±∞} with admissibility constants (η_*, α_*, A_*).

    The evaluator maps rows of unit representatives to a masked array; masked
    entries are points of the singular set, where u equals singular_sign·∞.

    Attributes:
        name: Identifier used in reports and CSV provenance
        evaluator: Vectorized evaluation on representatives
        eta_star: Tail exponent η_* > 0
        alpha_star: Hölder exponent α_* in (0, 1]
        a_star: Constant A_* > 0
        singular_set: Descriptor of Σ_u
        singular_sign: Sign of the infinite value taken on Σ_u
    """

    name: str
    evaluator: Evaluator
    eta_star: float
    alpha_star: float
    a_star: float
    singular_set: SingularSet
    singular_sign: int = -1

    def __post_init__(self):
        if not self.eta_star > 0.0:
            raise PreconditionError(f"eta_star must be positive, got {self.eta_star}")
        if not 0.0 < self.alpha_star <= 1.0:
            raise PreconditionError(f"alpha_star must be in (0, 1], got {self.alpha_star}")
        if not self.a_star > 0.0:
            raise PreconditionError(f"a_star must be positive, got {self.a_star}")

    def evaluate(self, reps: np.ndarray) -> np.ma.MaskedArray:
        """Values of u on rows of representatives; singular points are masked."""
        return self.evaluator(np.atleast_2d(np.asarray(reps, dtype=float)))

    def eval(self, x: ProjPoint) -> ExtendedReal:
        value = self.evaluate(x.vector[None, :])
        if np.ma.is_masked(value[0]):
            return Extended.NEG_INF if self.singular_sign < 0 else Extended.POS_INF
        return float(value[0])

    def with_constants(
        self,
        eta_star: float | None = None,
        alpha_star: float | None = None,
        a_star: float | None = None,
    ) -> "AdmissibleFn":
        return replace(
            self,
            eta_star=self.eta_star if eta_star is None else eta_star,
            alpha_star=self.alpha_star if alpha_star is None else alpha_star,
            a_star=self.a_star if a_star is None else a_star,
        )


def _zero_evaluator(reps: np.ndarray) -> np.ma.MaskedArray:
    return np.ma.masked_array(np.zeros(reps.shape[0]), mask=np.zeros(reps.shape[0], dtype=bool))


def u_zero(eta_star: float = 1.0, alpha_star: float = 1.0, a_star: float = 1.0) -> AdmissibleFn:
    """The admissible function u ≡ 0, which reduces targets to the norm cocycle."""
    return AdmissibleFn(
        name="zero",
        evaluator=_zero_evaluator,
        eta_star=eta_star,
        alpha_star=alpha_star,
        a_star=a_star,
        singular_set=SingularSet(kind="empty"),
    )


def logdist_constants(fit: RegularityFit) -> tuple[float, float]:
    """
    Admissibility constants (η_*, A_*) of log d(·, H_y) from a regularity fit.

    η_* is the fitted exponent; A_* is the smallest constant with
    ν̂(𝔹(H_y, r)) ≤ A_*·r^η_* at every fitted radius, and at least 1 so the
    Hölder property holds with the same constant.
    """
    eta = fit.eta_hat
    if not math.isfinite(eta) or eta <= 0.0:
        raise PreconditionError(f"Regularity fit has no positive exponent (eta_hat={eta})")
    envelope = max(m / r**eta for r, m in zip(fit.radii, fit.masses, strict=True))
    return eta, max(1.0, envelope)


def fit_logdist_constants(
    nu_samples: Sequence[ProjPoint] | ProjSample, y: DualProjPoint, radii: Sequence[float]
) -> tuple[float, float]:
    """
    Fit ν around H_y and return (η_*, A_*) for log δ(·, y).

    Raises:
        InsufficientMassError: If too few samples lie near H_y
        PreconditionError: If the fitted exponent is not positive
    """
    return logdist_constants(regularity_fit(nu_samples, y, radii))


def u_logdist(y: DualProjPoint, fit: RegularityFit | None = None) -> AdmissibleFn:
    """
    The admissible function u(x) = log d(x, H_y) = log δ(x, y).

    Args:
        y: Dual point defining the singular hyperplane H_y
        fit: Regularity fit of ν around H_y; without one, η_* = A_* = 1
            (the constants of the uniform measure on ℙ¹)

    Returns:
        AdmissibleFn with α_* = 1 and singular set H_y
    """
    f = y.vector
    eta_star, a_star = logdist_constants(fit) if fit is not None else (1.0, 1.0)

    def evaluator(reps: np.ndarray) -> np.ma.MaskedArray:
        distances = np.minimum(np.abs(reps @ f), 1.0)
        singular = distances < SINGULAR_FLOOR
        values = np.log(np.where(singular, 1.0, distances))
        return np.ma.masked_array(values, mask=singular)

    return AdmissibleFn(
        name="logdist",
        evaluator=evaluator,
        eta_star=eta_star,
        alpha_star=1.0,
        a_star=a_star,
        singular_set=SingularSet(kind="hyperplane", dual=y),
    )


@dataclass(frozen=True)
class TailCheckRow:
    t: float
    tail: float
    tail_lower: float
    bound: float
    passed: bool


@dataclass(frozen=True)
class Property1Report:
    """Empirical ν-tails of |u| against A_*e^{−η_* t}."""

    rows: tuple[TailCheckRow, ...]
    samples: int

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)


def _abs_values(u: AdmissibleFn, reps: np.ndarray) -> np.ndarray:
    values = u.evaluate(reps)
    return np.where(np.ma.getmaskarray(values), np.inf, np.abs(np.ma.getdata(values)))


def check_property1(
    u: AdmissibleFn,
    nu_samples: Sequence[ProjPoint],
    t_grid: Sequence[float],
    confidence: float = 0.99,
) -> Property1Report:
    """
    Check ν{|u| ≥ t} ≤ A_*e^{−η_* t} on a t-grid.

    A row fails only when the Wilson lower confidence bound of the empirical
    tail exceeds the bound.

    Raises:
        PreconditionError: With fewer than 10⁴ samples
    """
    reps = as_reps(nu_samples)
    total = reps.shape[0]
    if total < MIN_PROPERTY1_SAMPLES:
        raise PreconditionError(f"Need at least {MIN_PROPERTY1_SAMPLES} samples, got {total}")
    magnitudes = _abs_values(u, reps)
    rows = []
    for t in t_grid:
        hits = int(np.count_nonzero(magnitudes >= t))
        lower, _ = wilson_interval(hits, total, confidence)
        bound = u.a_star * math.exp(-u.eta_star * t)
        rows.append(
            TailCheckRow(
                t=float(t), tail=hits / total, tail_lower=lower, bound=bound, passed=lower <= bound
            )
        )
    return Property1Report(rows=tuple(rows), samples=total)


@dataclass(frozen=True)
class PointPairs:
    """Two aligned arrays of representatives, one pair per row."""

    first: np.ndarray
    second: np.ndarray

    def __len__(self) -> int:
        return int(self.first.shape[0])

    def __iter__(self) -> Iterator[tuple[ProjPoint, ProjPoint]]:
        for a, b in zip(self.first, self.second, strict=True):
            yield ProjPoint.from_vector(a), ProjPoint.from_vector(b)


def as_pair_arrays(
    pairs: PointPairs | Sequence[tuple[ProjPoint, ProjPoint]],
) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(pairs, PointPairs):
        return pairs.first, pairs.second
    if len(pairs) == 0:
        return np.empty((0, 0)), np.empty((0, 0))
    first = np.array([a.rep for a, _ in pairs])
    second = np.array([b.rep for _, b in pairs])
    return first, second


def pair_distances(first: np.ndarray, second: np.ndarray) -> np.ndarray:
    """Row-wise sine distances between unit representatives."""
    inner = np.einsum("ij,ij->i", first, second)
    residual = first - inner[:, None] * second
    return np.minimum(np.linalg.norm(residual, axis=1), 1.0)


def sample_pairs(
    nu_samples: Sequence[ProjPoint], count: int, max_distance: float, seed: int
) -> PointPairs:
    """
    Nearby pairs (x, x′) with x drawn from the samples and x′ a random perturbation.

    The perturbation size is uniform on (0, max_distance) relative to a unit
    Gaussian direction, so distances range up to about max_distance.
    """
    reps = as_reps(nu_samples)
    rng = stream(seed, StreamPurpose.PAIRS, 0)
    picks = reps[rng.integers(0, reps.shape[0], size=count)]
    noise = rng.standard_normal(picks.shape)
    noise -= np.einsum("ij,ij->i", noise, picks)[:, None] * picks
    noise /= np.maximum(np.linalg.norm(noise, axis=1), 1e-300)[:, None]
    scale = rng.random(count) * max_distance
    partners = canonicalize_rows(picks + scale[:, None] * noise)
    return PointPairs(first=picks, second=partners)


@dataclass(frozen=True)
class Property2Report:
    """Worst ratio |u(x)−u(x′)| / (A_* d^α_*(e^{α_*|u(x)|}+e^{α_*|u(x′)|})) over pairs."""

    max_ratio: float
    pairs: int

    @property
    def passed(self) -> bool:
        return self.max_ratio <= 1.0


def check_property2(
    u: AdmissibleFn, pairs: PointPairs | Sequence[tuple[ProjPoint, ProjPoint]]
) -> Property2Report:
    """
    Check the weighted Hölder property of u on finite pairs.

    Raises:
        SingularInputError: If any pair touches the singular set
    """
    first, second = as_pair_arrays(pairs)
    if first.shape[0] == 0:
        return Property2Report(max_ratio=0.0, pairs=0)
    u1, u2 = u.evaluate(first), u.evaluate(second)
    if np.any(np.ma.getmaskarray(u1)) or np.any(np.ma.getmaskarray(u2)):
        raise SingularInputError(f"A pair touches the singular set of u={u.name}")
    v1, v2 = np.ma.getdata(u1), np.ma.getdata(u2)
    alpha = u.alpha_star
    numerator = np.abs(v1 - v2)
    denominator = (
        u.a_star
        * pair_distances(first, second) ** alpha
        * (np.exp(alpha * np.abs(v1)) + np.exp(alpha * np.abs(v2)))
    )
    ratios = np.divide(
        numerator, denominator, out=np.zeros_like(numerator), where=denominator > 0.0
    )
    return Property2Report(max_ratio=float(ratios.max()), pairs=int(first.shape[0]))


@dataclass(frozen=True)
class BumpProfile:
    """
    The base bump χ̃ on ℝ.

    χ̃(t) = S(g(1 − |t|)) with the smoothstep S(x) = 3x² − 2x³ and
    g(s) = clip((s − a)/(1 − 2a), 0, 1), a = plateau. It equals 1 on
    |t| ≤ plateau, vanishes for |t| ≥ 1 − plateau, and satisfies
    χ̃(t) + χ̃(t − 1) = 1 on [0, 1].
    """

    plateau: float = BUMP_PLATEAU

    def _inner(self, t: np.ndarray) -> np.ndarray:
        a = self.plateau
        return np.clip((1.0 - np.abs(t) - a) / (1.0 - 2.0 * a), 0.0, 1.0)

    def __call__(self, t: np.ndarray | float) -> np.ndarray:
        x = self._inner(np.asarray(t, dtype=float))
        return x * x * (3.0 - 2.0 * x)

    def derivative(self, t: np.ndarray | float) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        x = self._inner(t)
        return -np.sign(t) * 6.0 * x * (1.0 - x) / (1.0 - 2.0 * self.plateau)

    @property
    def c1_norm(self) -> float:
        """sup|χ̃| + sup|χ̃′|."""
        return 1.0 + 1.5 / (1.0 - 2.0 * self.plateau)


@dataclass(frozen=True, eq=False)
class PartitionBump:
    """The bump χ_k = χ̃(u + k), supported where |u + k| < 1."""

    k: int
    underlying: AdmissibleFn
    base_bump: BumpProfile

    def evaluate(self, reps: np.ndarray) -> np.ndarray:
        values = self.underlying.evaluate(reps)
        out = self.base_bump(np.ma.getdata(values) + self.k)
        # Infinite u lies outside every level set.
        out[np.ma.getmaskarray(values)] = 0.0
        return out

    def eval(self, x: ProjPoint) -> float:
        return float(self.evaluate(x.vector[None, :])[0])


def partition(u: AdmissibleFn, k: int, base_bump: BumpProfile | None = None) -> PartitionBump:
    """The k-th bump of the partition of unity Σ_k χ_k = 1 off Σ_u."""
    return PartitionBump(k=k, underlying=u, base_bump=base_bump or BumpProfile())


def partition_holder_check(
    u: AdmissibleFn,
    k: int,
    alpha: float,
    pairs: PointPairs | Sequence[tuple[ProjPoint, ProjPoint]],
) -> float:
    """
    Largest |χ_k(x) − χ_k(x′)| / (d(x, x′)^α e^{α|k|}) over the pairs.

    Raises:
        PreconditionError: Unless 0 < alpha ≤ α_*
    """
    if not 0.0 < alpha <= u.alpha_star:
        raise PreconditionError(f"alpha must be in (0, {u.alpha_star}], got {alpha}")
    first, second = as_pair_arrays(pairs)
    if first.shape[0] == 0:
        return 0.0
    bump = partition(u, k)
    numerator = np.abs(bump.evaluate(first) - bump.evaluate(second))
    denominator = pair_distances(first, second) ** alpha * math.exp(alpha * abs(k))
    ratios = np.divide(
        numerator, denominator, out=np.zeros_like(numerator), where=denominator > 0.0
    )
    return float(ratios.max())


@dataclass(frozen=True)
class PartitionReport:
    """
    Empirical check of the partition of unity at regular sample points.

    Attributes:
        sum_residual: max |Σ_k χ_k(w) − 1|
        max_overlap: Largest number of nonzero bumps at one point
        support_violations: Count of (w, k) with χ_k(w) ≠ 0 although |u(w) + k| ≥ 1
        k_range: Lowest and highest k evaluated
    """

    sum_residual: float
    max_overlap: int
    support_violations: int
    k_range: tuple[int, int]


def check_partition(
    u: AdmissibleFn, reps: np.ndarray, base_bump: BumpProfile | None = None
) -> PartitionReport:
    """
    Evaluate every bump that can be nonzero on the regular points of reps.

    k runs over ⌊−max u⌋ − 2 … ⌈−min u⌉ + 2, which covers ⌈|u(w)|⌉ + 2 around each point.
    """
    values = u.evaluate(reps)
    singular = np.ma.getmaskarray(values)
    finite = np.ma.getdata(values)[~singular]
    regular = reps[~singular]
    if finite.size == 0:
        return PartitionReport(
            sum_residual=0.0, max_overlap=0, support_violations=0, k_range=(0, 0)
        )

    k_lo = math.floor(-float(finite.max())) - 2
    k_hi = math.ceil(-float(finite.min())) + 2
    total = np.zeros(finite.size)
    active = np.zeros(finite.size, dtype=int)
    violations = 0
    for k in range(k_lo, k_hi + 1):
        bump = partition(u, k, base_bump).evaluate(regular)
        nonzero = bump != 0.0
        total += bump
        active += nonzero
        violations += int(np.count_nonzero(nonzero & (np.abs(finite + k) >= 1.0)))
    return PartitionReport(
        sum_residual=float(np.max(np.abs(total - 1.0))),
        max_overlap=int(active.max()),
        support_violations=violations,
        k_range=(k_lo, k_hi),
    )


@dataclass(frozen=True)
class HolderProfile:
    """
    Normalized Hölder ratios of χ_k over a window of k.

    Attributes:
        rows: (k, ratio) with ratio as returned by partition_holder_check
        alpha: Exponent used
    """

    rows: tuple[tuple[int, float], ...]
    alpha: float

    @property
    def growth(self) -> float:
        """Largest ratio over the window divided by the ratio at k = 0 (0 if all vanish)."""
        ratios = dict(self.rows)
        top = max(ratios.values(), default=0.0)
        if top == 0.0:
            return 0.0
        base = ratios.get(0, 0.0)
        return top / base if base > 0.0 else math.inf

    @property
    def uniform(self) -> bool:
        return self.growth <= HOLDER_UNIFORM_BOUND


def partition_holder_profile(
    u: AdmissibleFn,
    alpha: float,
    pairs: PointPairs | Sequence[tuple[ProjPoint, ProjPoint]],
    ks: Sequence[int] = HOLDER_K_RANGE,
) -> HolderProfile:
    """
    partition_holder_check for every k in ks.

    Raises:
        PreconditionError: Unless 0 < alpha ≤ α_*
    """
    rows = tuple((k, partition_holder_check(u, k, alpha, pairs)) for k in ks)
    profile = HolderProfile(rows=rows, alpha=alpha)
    if not profile.uniform:
        logger.warning(f"Hölder ratios of the partition grow by {profile.growth:.3g} over k")
    return profile


@dataclass(frozen=True)
class TailProbeReport:
    """
    Probe of μ^{*n}{|u(S_n x)| ≥ A log n}.

    Attributes:
        a_const: The constant A
        rows: One row per horizon
        c_ref: Reference level max(1, 2·max n·p_upper over the first half of the horizons)
    """

    a_const: float
    rows: tuple[ProbeRow, ...]
    c_ref: float

    @property
    def scaled_max(self) -> float:
        """Largest n·p_hat."""
        return max((r.n * r.p_hat for r in self.rows), default=0.0)

    @property
    def bounded(self) -> bool:
        """True when no horizon shows n·p significantly above the reference level."""
        return all(r.n * r.p_lower <= self.c_ref for r in self.rows)


def tail_ldt_probe(
    mu: MeasureSpec,
    u: AdmissibleFn,
    x0: ProjPoint,
    n_list: Sequence[int],
    trials: int,
    a_const: float,
    seed: int,
    threads: int = 1,
) -> TailProbeReport:
    """
    Monte Carlo check that n·μ^{*n}{|u(S_n x)| ≥ a_const·log n} stays bounded.

    Raises:
        PreconditionError: If a_const ≤ 0 or a horizon is below 1
    """
    if a_const <= 0.0:
        raise PreconditionError(f"a_const must be positive, got {a_const}")
    if any(n < 1 for n in n_list):
        raise PreconditionError("Horizons must be ≥ 1")
    if trials == 0:
        return TailProbeReport(a_const=a_const, rows=(), c_ref=1.0)

    rows = []
    for n in n_list:
        batch = run_walks(mu, x0, n, trials, seed, threads=threads)
        magnitudes = _abs_values(u, batch.x_end)
        hits = int(np.count_nonzero(magnitudes >= a_const * math.log(n)))
        rows.append(probe_row(n, hits, trials))

    early = rows[: max(1, len(rows) // 2)]
    c_ref = max(1.0, 2.0 * max(r.n * r.p_upper for r in early))
    report = TailProbeReport(a_const=a_const, rows=tuple(rows), c_ref=c_ref)
    if not report.bounded:
        logger.warning(f"n·p_hat exceeds the reference level {c_ref:.3g} for u={u.name}")
    return report


def tilted_tail_probe(
    mu: MeasureSpec,
    u: AdmissibleFn,
    x0: ProjPoint,
    tilt: StepTilt,
    steps: int,
    samples: int,
    t_grid: Sequence[float],
    seed: int,
    threads: int = 1,
) -> Property1Report:
    """
    Tail check of u under the stationary law of a tilted chain.

    Runs `samples` tilted walks for `steps` steps and applies the tail
    check to their end points, which approximate the tilted stationary law.
    """
    batch = run_walks(mu, x0, steps, samples, seed, threads=threads, tilt=tilt)
    return check_property1(u, ProjSample(batch.x_end), t_grid)

# ABOUTME: Harness for the limit theorems with targets: Berry–Esseen, local, moderate deviations
# ABOUTME: Monte Carlo functionals of (σ + u − nγ, S_n x) against their Gaussian predictions

import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from typing import NamedTuple, Self

import numpy as np
from scipy import integrate, special, stats

from cocyclelab.admissible import AdmissibleFn, PointPairs, as_pair_arrays, pair_distances
from cocyclelab.errors import DegenerateVarianceError, PreconditionError
from cocyclelab.fourier import SampledFunction
from cocyclelab.projgeom import ProjPoint, angles_of, as_reps
from cocyclelab.randwalk import MeasureSpec, StepTilt, run_walks
from cocyclelab.transfer import cramer_zeta

logger = logging.getLogger(__name__)

# Below this many trials the Monte Carlo error dominates the discrepancies.
MIN_TRIALS = 10_000

# Local statistics warn when fewer samples than this land in supp ψ.
MIN_HITS = 100

# Gaussian integrals are truncated at this many standard deviations.
GAUSSIAN_SPAN = 40.0

# Moderate-deviation predictions are restricted to |t|/√n ≤ this.
MAX_MODERATE_RATIO = 0.3


@dataclass(frozen=True)
class Interval:
    """An interval J = [lo, hi] of the extended real line; ψ_J = ψ·1_J."""

    lo: float = -math.inf
    hi: float = math.inf

    def __post_init__(self):
        if not self.lo < self.hi:
            raise PreconditionError(f"Empty interval [{self.lo}, {self.hi}]")

    @property
    def is_full(self) -> bool:
        return self.lo == -math.inf and self.hi == math.inf

    def contains(self, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        return (s >= self.lo) & (s <= self.hi)

    def __str__(self) -> str:
        return f"[{self.lo:g},{self.hi:g}]"


@dataclass(frozen=True, eq=False)
class PsiTarget:
    """
    A target ψ on ℝ with its limits at ±∞ and, when compactly supported, its support.

    Attributes:
        name: Identifier used in reports
        fn: Vectorized evaluation
        left_limit: lim_{s→−∞} ψ(s)
        right_limit: lim_{s→+∞} ψ(s)
        support: Bounded support, or None
        constant: Value when ψ is constant, else None
        breakpoints: Points where ψ is not smooth, passed to quadrature
        mass: Precomputed ∫ψ, set for sampled targets
    """

    name: str
    fn: Callable[[np.ndarray], np.ndarray]
    left_limit: float = 0.0
    right_limit: float = 0.0
    support: tuple[float, float] | None = None
    constant: float | None = None
    breakpoints: tuple[float, ...] = ()
    mass: float | None = None

    def __call__(self, s: np.ndarray) -> np.ndarray:
        return np.asarray(self.fn(np.asarray(s, dtype=float)), dtype=float)

    @classmethod
    def from_sampled(cls, name: str, sampled: SampledFunction) -> Self:
        """Target given by grid values; it must vanish at both grid ends."""
        if sampled.values[0] != 0.0 or sampled.values[-1] != 0.0:
            raise PreconditionError(f"Sampled target '{name}' must vanish at the grid ends")
        nonzero = np.flatnonzero(sampled.values)
        support = (
            (float(sampled.t_grid[nonzero[0] - 1]), float(sampled.t_grid[nonzero[-1] + 1]))
            if nonzero.size
            else (0.0, 0.0)
        )
        return cls(
            name=name,
            fn=lambda s: sampled(s).real,
            support=support,
            mass=float(np.real(sampled.integral())),
        )

    def integral(self) -> float:
        """∫ψ over ℝ; requires compact support."""
        if self.support is None:
            raise PreconditionError(f"Target '{self.name}' is not compactly supported")
        if self.mass is not None:
            return self.mass
        lo, hi = self.support
        if lo == hi:
            return 0.0
        value, _ = integrate.quad(
            lambda s: float(self(np.array([s]))[0]),
            lo,
            hi,
            points=[p for p in self.breakpoints if lo < p < hi] or None,
            limit=200,
            epsabs=1e-13,
        )
        return value


@dataclass(frozen=True, eq=False)
class PhiTarget:
    """A Hölder target φ on the projective space, evaluated on rows of representatives."""

    name: str
    fn: Callable[[np.ndarray], np.ndarray]
    alpha: float = 1.0

    def __call__(self, reps: np.ndarray) -> np.ndarray:
        reps = np.atleast_2d(np.asarray(reps, dtype=float))
        return np.asarray(self.fn(reps), dtype=float)

    def at(self, x: ProjPoint) -> float:
        return float(self(x.vector[None, :])[0])


def _weierstrass(reps: np.ndarray) -> np.ndarray:
    theta = angles_of(reps)
    terms = [0.5**k * np.cos(2.0 * 3**k * theta) for k in range(8)]
    return 1.0 + 0.25 * np.sum(terms, axis=0)


PSI_TARGETS: dict[str, PsiTarget] = {
    "one": PsiTarget(
        name="one", fn=lambda s: np.ones_like(s), left_limit=1.0, right_limit=1.0, constant=1.0
    ),
    "gauss_bump": PsiTarget(name="gauss_bump", fn=lambda s: np.exp(-0.5 * s * s)),
    "clamped_linear": PsiTarget(
        name="clamped_linear",
        fn=lambda s: np.clip(s, 0.0, 1.0),
        right_limit=1.0,
        breakpoints=(0.0, 1.0),
    ),
    "triangle": PsiTarget(
        name="triangle",
        fn=lambda s: np.maximum(0.0, 1.0 - np.abs(s)),
        support=(-1.0, 1.0),
        breakpoints=(-1.0, 0.0, 1.0),
    ),
    "zero": PsiTarget(name="zero", fn=lambda s: np.zeros_like(s), support=(0.0, 0.0), constant=0.0),
}

PHI_TARGETS: dict[str, PhiTarget] = {
    "one": PhiTarget(name="one", fn=lambda reps: np.ones(reps.shape[0])),
    "cos2": PhiTarget(name="cos2", fn=lambda reps: 0.5 + 0.25 * np.cos(2.0 * angles_of(reps))),
    # Hölder exponent log 2 / log 3.
    "weierstrass": PhiTarget(name="weierstrass", fn=_weierstrass, alpha=math.log(2) / math.log(3)),
}


def psi_target(name: str) -> PsiTarget:
    try:
        return PSI_TARGETS[name]
    except KeyError as e:
        raise PreconditionError(f"Unknown psi target '{name}'") from e


def phi_target(name: str) -> PhiTarget:
    try:
        return PHI_TARGETS[name]
    except KeyError as e:
        raise PreconditionError(f"Unknown phi target '{name}'") from e


def h_norm(psi: SampledFunction) -> float:
    """‖ψ‖_H = ‖ψ‖_∞ + ‖ψ′‖_∞ + ‖ψ′‖_{L¹}, ψ′ by central differences."""
    derivative = np.gradient(psi.values, psi.step)
    return float(
        np.max(np.abs(psi.values))
        + np.max(np.abs(derivative))
        + integrate.trapezoid(np.abs(derivative), psi.t_grid)
    )


def holder_quotient(
    phi: PhiTarget, pairs: PointPairs | Sequence[tuple[ProjPoint, ProjPoint]], alpha: float
) -> float:
    """max |φ(x) − φ(x′)| / d(x, x′)^α over pairs at positive distance."""
    first, second = as_pair_arrays(pairs)
    if first.shape[0] == 0:
        return 0.0
    distances = pair_distances(first, second)
    keep = distances > 0.0
    differences = np.abs(phi(first[keep]) - phi(second[keep]))
    return float(np.max(differences / distances[keep] ** alpha, initial=0.0))


class GaussianTargets(NamedTuple):
    """Distribution function, density and transform of 𝒩(0, ϱ²)."""

    cdf: Callable[[np.ndarray], np.ndarray]
    pdf: Callable[[np.ndarray], np.ndarray]
    transform: Callable[[np.ndarray], np.ndarray]


def gaussian_targets(rho2: float) -> GaussianTargets:
    """
    H, h and ĥ of the centred Gaussian with variance ϱ².

    Raises:
        DegenerateVarianceError: If rho2 ≤ 0
    """
    if not rho2 > 0.0:
        raise DegenerateVarianceError(f"rho2 must be positive, got {rho2}")
    rho = math.sqrt(rho2)

    def cdf(b):
        return 0.5 * special.erfc(-np.asarray(b, dtype=float) / (rho * math.sqrt(2.0)))

    def pdf(b):
        b = np.asarray(b, dtype=float)
        return np.exp(-b * b / (2.0 * rho2)) / (math.sqrt(2.0 * math.pi) * rho)

    def transform(xi):
        xi = np.asarray(xi, dtype=float)
        return np.exp(-rho2 * xi * xi / 2.0)

    return GaussianTargets(cdf=cdf, pdf=pdf, transform=transform)


@dataclass(frozen=True)
class TargetParams:
    """Provenance of a statistic, carried into CSV rows."""

    u: str
    interval: str
    psi: str
    phi: str
    trials: int
    seed: int


class WindowSamples(NamedTuple):
    """
    One simulated batch, shared by every statistic evaluated at its horizon.

    Attributes:
        n: Horizon
        values: σ + u(S_n x) − nγ − shift per trial (arbitrary where singular)
        singular: Trials where u(S_n x) is infinite
        sign: Sign of the infinite value of u
        ends: Representatives of S_n x
        weights: Importance weights for tilted runs, else None
        u_name: Name of the admissible function
        seed: Stream seed
    """

    n: int
    values: np.ndarray
    singular: np.ndarray
    sign: int
    ends: np.ndarray
    weights: np.ndarray | None
    u_name: str
    seed: int

    @property
    def trials(self) -> int:
        return int(self.values.size)

    def params(self, psi: PsiTarget, interval: Interval, phi: PhiTarget) -> TargetParams:
        return TargetParams(
            u=self.u_name,
            interval=str(interval),
            psi=psi.name,
            phi=phi.name,
            trials=self.trials,
            seed=self.seed,
        )


def window_samples(
    mu: MeasureSpec,
    x0: ProjPoint,
    u: AdmissibleFn,
    n: int,
    trials: int,
    gamma: float,
    seed: int,
    shift: float = 0.0,
    threads: int = 1,
    tilt: StepTilt | None = None,
) -> WindowSamples:
    """
    Simulate σ(S_n, x) + u(S_n x) − nγ − shift for `trials` walks.

    Raises:
        PreconditionError: If n < 1
    """
    if n < 1:
        raise PreconditionError(f"n must be ≥ 1, got {n}")
    batch = run_walks(mu, x0, n, trials, seed, threads=threads, tilt=tilt)
    u_values = u.evaluate(batch.x_end)
    singular = np.ma.getmaskarray(u_values)
    values = batch.sigma + np.ma.getdata(u_values) - n * gamma - shift
    weights = None if batch.log_weight is None else np.exp(batch.log_weight)
    return WindowSamples(
        n=n,
        values=values,
        singular=singular,
        sign=u.singular_sign,
        ends=batch.x_end,
        weights=weights,
        u_name=u.name,
        seed=seed,
    )


def _psi_values(
    psi: PsiTarget, interval: Interval, s: np.ndarray, singular: np.ndarray, sign: int
) -> np.ndarray:
    """ψ_J(s), with singular samples set to the limit of ψ_J at ±∞."""
    values = psi(s) * interval.contains(s)
    if singular.any():
        if sign < 0:
            limit = psi.left_limit if interval.lo == -math.inf else 0.0
        else:
            limit = psi.right_limit if interval.hi == math.inf else 0.0
        values = np.where(singular, limit, values)
    return values


def en_values(
    samples: WindowSamples, psi: PsiTarget, interval: Interval, phi: PhiTarget
) -> np.ndarray:
    """Per-trial values ψ_J((σ + u(S_n x) − nγ)/√n)·φ(S_n x)."""
    scaled = samples.values / math.sqrt(samples.n)
    return _psi_values(psi, interval, scaled, samples.singular, samples.sign) * phi(samples.ends)


def empirical_En(
    mu: MeasureSpec,
    x0: ProjPoint,
    u: AdmissibleFn,
    psi: PsiTarget,
    interval: Interval,
    phi: PhiTarget,
    n: int,
    trials: int,
    gamma: float,
    seed: int,
    threads: int = 1,
) -> float:
    """
    Monte Carlo mean of ψ_J((σ + u(S_n x) − nγ)/√n)·φ(S_n x).

    Trials where u(S_n x) is infinite contribute the corresponding limit of ψ_J.
    """
    if trials < MIN_TRIALS:
        logger.warning(f"Only {trials} trials; discrepancies below MC noise are not resolved")
    samples = window_samples(mu, x0, u, n, trials, gamma, seed, threads=threads)
    return float(en_values(samples, psi, interval, phi).mean())


def nu_mean(
    phi: PhiTarget, nu_samples: Sequence[ProjPoint] | np.ndarray, nu_weights: np.ndarray | None
) -> float:
    """∫φ dν̂ from samples, or from weighted points."""
    reps = nu_samples if isinstance(nu_samples, np.ndarray) else as_reps(nu_samples)
    values = phi(reps)
    if nu_weights is None:
        return float(values.mean())
    return float(np.average(values, weights=nu_weights))


def gaussian_integral(psi: PsiTarget, interval: Interval, rho2: float) -> float:
    """∫ ψ_J(s) h(s) ds against the 𝒩(0, ϱ²) density."""
    targets = gaussian_targets(rho2)
    if psi.constant is not None:
        return psi.constant * float(targets.cdf(interval.hi) - targets.cdf(interval.lo))
    rho = math.sqrt(rho2)
    lo = max(interval.lo, -GAUSSIAN_SPAN * rho)
    hi = min(interval.hi, GAUSSIAN_SPAN * rho)
    if lo >= hi:
        return 0.0
    points = sorted({p for p in (*psi.breakpoints, 0.0) if lo < p < hi}) or None
    value, _ = integrate.quad(
        lambda s: float(psi(np.array([s]))[0] * targets.pdf(s)),
        lo,
        hi,
        points=points,
        limit=400,
        epsabs=1e-13,
    )
    return value


def prediction_R(
    psi: PsiTarget,
    interval: Interval,
    phi: PhiTarget,
    nu_samples: Sequence[ProjPoint] | np.ndarray,
    rho2: float,
    nu_weights: np.ndarray | None = None,
) -> float:
    """
    Gaussian prediction ∫ψ_J h ds · ∫φ dν̂.

    Args:
        psi: Target on ℝ
        interval: Truncation J
        phi: Target on the projective space
        nu_samples: Points representing ν̂ (samples, or grid nodes with nu_weights)
        rho2: Asymptotic variance
        nu_weights: Optional weights of the points

    Raises:
        DegenerateVarianceError: If rho2 ≤ 0
    """
    return gaussian_integral(psi, interval, rho2) * nu_mean(phi, nu_samples, nu_weights)


@dataclass(frozen=True)
class BEResult:
    """Discrepancy |E_n − R| of the Berry–Esseen functional at horizon n."""

    n: int
    discrepancy: float
    scaled: float
    mc_stderr: float
    params: TargetParams
    empirical: float = math.nan
    prediction: float = math.nan

    @property
    def scaled_stderr(self) -> float:
        return math.sqrt(self.n) * self.mc_stderr


def be_from_samples(
    samples: WindowSamples,
    psi: PsiTarget,
    interval: Interval,
    phi: PhiTarget,
    prediction: float,
) -> BEResult:
    """Berry–Esseen discrepancy of one target against a precomputed prediction."""
    contributions = en_values(samples, psi, interval, phi)
    trials = contributions.size
    empirical = float(contributions.mean())
    stderr = float(contributions.std(ddof=1) / math.sqrt(trials)) if trials > 1 else math.nan
    discrepancy = abs(empirical - prediction)
    return BEResult(
        n=samples.n,
        discrepancy=discrepancy,
        scaled=math.sqrt(samples.n) * discrepancy,
        mc_stderr=stderr,
        params=samples.params(psi, interval, phi),
        empirical=empirical,
        prediction=prediction,
    )


def berry_esseen_stat(
    mu: MeasureSpec,
    x0: ProjPoint,
    u: AdmissibleFn,
    psi: PsiTarget,
    interval: Interval,
    phi: PhiTarget,
    n: int,
    trials: int,
    gamma: float,
    rho2: float,
    nu_samples: Sequence[ProjPoint] | np.ndarray,
    seed: int,
    threads: int = 1,
    nu_weights: np.ndarray | None = None,
) -> BEResult:
    """Berry–Esseen discrepancy with targets; scaled = √n·discrepancy."""
    prediction = prediction_R(psi, interval, phi, nu_samples, rho2, nu_weights)
    if trials < MIN_TRIALS:
        logger.warning(f"Only {trials} trials; discrepancies below MC noise are not resolved")
    samples = window_samples(mu, x0, u, n, trials, gamma, seed, threads=threads)
    return be_from_samples(samples, psi, interval, phi, prediction)


def berry_esseen_ks(samples: np.ndarray, rho2: float) -> float:
    """Kolmogorov distance between the law of normalized samples and 𝒩(0, ϱ²)."""
    if not rho2 > 0.0:
        raise DegenerateVarianceError(f"rho2 must be positive, got {rho2}")
    result = stats.kstest(np.asarray(samples, dtype=float), stats.norm(scale=math.sqrt(rho2)).cdf)
    return float(result.statistic)


@dataclass(frozen=True)
class LLTResult:
    """
    Local limit statistic at horizon n and offset t.

    Attributes:
        lhs: √(2πn)·ϱ·(Monte Carlo mean)
        rhs: e^{−t²/(2ϱ²n)}·∫ψ·mean_ν̂(φ)
        abs_err: |lhs − rhs|
        stderr: Standard error of lhs
        hits: Trials with ψ ≠ 0
    """

    n: int
    t: float
    lhs: float
    rhs: float
    abs_err: float
    stderr: float
    hits: int
    params: TargetParams | None = None

    @property
    def low_hits(self) -> bool:
        return self.hits < MIN_HITS


def _local_mean(
    samples: WindowSamples, psi: PsiTarget, phi: PhiTarget, offset: float
) -> tuple[float, float, int]:
    """Weighted mean, its standard error and the hit count of ψ(offset + values)·φ."""
    psi_values = _psi_values(
        psi, Interval(), offset + samples.values, samples.singular, samples.sign
    )
    contributions = psi_values * phi(samples.ends)
    if samples.weights is not None:
        contributions = contributions * samples.weights
    hits = int(np.count_nonzero(psi_values))
    count = contributions.size
    stderr = float(contributions.std(ddof=1) / math.sqrt(count)) if count > 1 else math.nan
    return float(contributions.mean()), stderr, hits


def llt_from_samples(
    samples: WindowSamples, psi: PsiTarget, phi: PhiTarget, t: float, rho2: float, phi_mean: float
) -> LLTResult:
    """Local limit statistic at offset t on a simulated batch; phi_mean = ∫φ dν̂."""
    if not rho2 > 0.0:
        raise DegenerateVarianceError(f"rho2 must be positive, got {rho2}")
    n = samples.n
    mean, stderr, hits = _local_mean(samples, psi, phi, t)
    scale = math.sqrt(2.0 * math.pi * n * rho2)
    lhs = scale * mean
    rhs = math.exp(-t * t / (2.0 * rho2 * n)) * psi.integral() * phi_mean
    if hits < MIN_HITS:
        logger.warning(f"llt_stat n={n}, t={t:g}: only {hits} samples hit the support of psi")
    return LLTResult(
        n=n,
        t=t,
        lhs=lhs,
        rhs=rhs,
        abs_err=abs(lhs - rhs),
        stderr=scale * stderr,
        hits=hits,
        params=samples.params(psi, Interval(), phi),
    )


def llt_stat(
    mu: MeasureSpec,
    x0: ProjPoint,
    u: AdmissibleFn,
    psi: PsiTarget,
    phi: PhiTarget,
    t: float,
    n: int,
    trials: int,
    gamma: float,
    rho2: float,
    nu_samples: Sequence[ProjPoint] | np.ndarray,
    seed: int,
    threads: int = 1,
    nu_weights: np.ndarray | None = None,
) -> LLTResult:
    """
    Local limit statistic √(2πn)ϱ·E[ψ(t + σ + u − nγ)φ(S_n x)] against its Gaussian value.

    Raises:
        PreconditionError: If ψ is not compactly supported or n < 1
        DegenerateVarianceError: If rho2 ≤ 0
    """
    if not rho2 > 0.0:
        raise DegenerateVarianceError(f"rho2 must be positive, got {rho2}")
    # Raises before simulating when ψ has no compact support.
    psi.integral()
    samples = window_samples(mu, x0, u, n, trials, gamma, seed, threads=threads)
    return llt_from_samples(samples, psi, phi, t, rho2, nu_mean(phi, nu_samples, nu_weights))


def moderate_prediction(t: float, n: int, gammas: Sequence[float], mass: float) -> float:
    """
    (1/(√(2π)ϱ))·exp(−t²/2 + (t³/√n)ζ(t/√n))·mass with ϱ² = γ₂.

    Args:
        t: Offset in units of ϱ√n
        n: Horizon
        gammas: (γ₁, …, γ₅)
        mass: ∫ψ·mean_ν̂(φ)

    Raises:
        PreconditionError: If |t|/√n > 0.3
        DegenerateVarianceError: If γ₂ ≤ 0
    """
    root = math.sqrt(n)
    if abs(t) / root > MAX_MODERATE_RATIO:
        raise PreconditionError(f"|t|/sqrt(n) must be ≤ {MAX_MODERATE_RATIO}, got {abs(t) / root}")
    g2 = gammas[1]
    if not g2 > 0.0:
        raise DegenerateVarianceError(f"gamma_2 must be positive, got {g2}")
    exponent = -t * t / 2.0
    if t != 0.0:
        exponent += t**3 / root * cramer_zeta(gammas[1:5], t / root)
    return math.exp(exponent) * mass / math.sqrt(2.0 * math.pi * g2)


@dataclass(frozen=True)
class ModerateReport:
    """
    Moderate-deviation local statistic.

    Attributes:
        lhs: √n·E[ψ(σ + u − nγ − √nϱt)φ(S_n x)], importance-weighted when tilted
        rhs: Prediction from moderate_prediction
        stderr: Standard error of lhs
        hits: Trials with ψ ≠ 0
        tilt_s: Tilt parameter of the sampler, 0 when untilted
    """

    n: int
    t: float
    lhs: float
    rhs: float
    stderr: float
    hits: int
    tilt_s: float = 0.0
    params: TargetParams | None = field(default=None)

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs if self.rhs != 0.0 else math.nan

    @property
    def ratio_stderr(self) -> float:
        return self.stderr / abs(self.rhs) if self.rhs != 0.0 else math.nan

    @property
    def low_hits(self) -> bool:
        return self.hits < MIN_HITS


def llt_moderate(
    mu: MeasureSpec,
    x0: ProjPoint,
    u: AdmissibleFn,
    psi: PsiTarget,
    phi: PhiTarget,
    t_of_n: Callable[[int], float],
    n: int,
    trials: int,
    gammas: Sequence[float],
    seed: int,
    nu_samples: Sequence[ProjPoint] | np.ndarray,
    threads: int = 1,
    tilt: StepTilt | None = None,
    tilt_s: float = 0.0,
    nu_weights: np.ndarray | None = None,
) -> ModerateReport:
    """
    Local statistic in the moderate-deviation window t = t_of_n(n).

    With a tilted sampler the walks are drawn from the reweighted chain and
    each trial carries its exact likelihood ratio, which populates the
    window around nγ + √nϱt.

    Raises:
        PreconditionError: If |t|/√n > 0.3
        DegenerateVarianceError: If γ₂ ≤ 0
    """
    t = float(t_of_n(n))
    mass = psi.integral() * nu_mean(phi, nu_samples, nu_weights)
    rhs = moderate_prediction(t, n, gammas, mass)
    gamma, rho = gammas[0], math.sqrt(gammas[1])
    root = math.sqrt(n)
    samples = window_samples(
        mu, x0, u, n, trials, gamma, seed, shift=root * rho * t, threads=threads, tilt=tilt
    )
    mean, stderr, hits = _local_mean(samples, psi, phi, 0.0)
    if hits < MIN_HITS:
        logger.warning(f"llt_moderate n={n}, t={t:g}: only {hits} samples hit the support of psi")
    return ModerateReport(
        n=n,
        t=t,
        lhs=root * mean,
        rhs=rhs,
        stderr=root * stderr,
        hits=hits,
        tilt_s=tilt_s,
        params=samples.params(psi, Interval(), phi),
    )

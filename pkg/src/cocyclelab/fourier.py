# ABOUTME: Smoothing toolkit: the band-limited kernel ϑ_δ, convolution, two-sided approximants
# ABOUTME: Conjugate characteristic functions and the principal-value Berry–Esseen functional

import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from typing import Self

import numpy as np
from scipy import integrate, ndimage, signal

from cocyclelab.errors import (
    EmptySampleError,
    GridMismatchError,
    PreconditionError,
    SingularityError,
)

logger = logging.getLogger(__name__)

# ϑ(t) = BASE_SCALE · (sin(t/4)/(t/4))⁴ has unit mass and a transform supported on [−1, 1].
BASE_SCALE = 3.0 / (8.0 * math.pi)

# Time grids run over [−T, T] with T = max(50δ, 1000δ²) and step δ²/10.
GRID_HALF_WIDTH_LINEAR = 50.0
GRID_HALF_WIDTH_QUADRATIC = 1000.0
GRID_STEP_FACTOR = 0.1

# Convolutions truncate ϑ_δ at 400δ²; the mass left out is about 1e-7.
CONVOLUTION_WINDOW = 400.0

# Slack added to the bracketing constants of approx_pm.
BRACKET_SLACK = 1e-6

SINGULARITY_LIMIT = 1e6


def base_density(t: np.ndarray | float) -> np.ndarray:
    """The base profile ϑ(t), even and positive."""
    u = np.asarray(t, dtype=float) / 4.0
    return BASE_SCALE * np.sinc(u / math.pi) ** 4


def _cubic_bspline(x: np.ndarray) -> np.ndarray:
    a = np.abs(x)
    inner = 2.0 / 3.0 - a**2 + a**3 / 2.0
    outer = (2.0 - a) ** 3 / 6.0
    return np.where(a <= 1.0, inner, np.where(a <= 2.0, outer, 0.0))


def base_transform(xi: np.ndarray | float) -> np.ndarray:
    """ϑ̂(ξ) = (3/2)·B₃(2ξ), the closed-form transform, zero for |ξ| ≥ 1."""
    return 1.5 * _cubic_bspline(2.0 * np.asarray(xi, dtype=float))


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """
    Real or complex values on a uniform grid over [−T, T].

    Attributes:
        t_grid: Uniform nodes
        values: Values at the nodes
    """

    t_grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if self.t_grid.ndim != 1 or self.t_grid.size < 2:
            raise PreconditionError("A sampled function needs at least two nodes")
        if self.values.shape != self.t_grid.shape:
            raise PreconditionError("Grid and values differ in shape")
        spacing = np.diff(self.t_grid)
        if not np.allclose(spacing, spacing[0], rtol=1e-9, atol=0.0):
            raise PreconditionError("Grid is not uniform")

    @classmethod
    def from_callable(
        cls, f: Callable[[np.ndarray], np.ndarray], half_width: float, step: float
    ) -> Self:
        count = int(round(2.0 * half_width / step))
        grid = np.linspace(-half_width, half_width, count + 1)
        return cls(t_grid=grid, values=np.asarray(f(grid)))

    @property
    def step(self) -> float:
        return float(self.t_grid[1] - self.t_grid[0])

    @property
    def half_width(self) -> float:
        return float(self.t_grid[-1])

    def __call__(self, t: np.ndarray | float) -> np.ndarray:
        """Piecewise-linear interpolation, constant beyond the grid ends."""
        t = np.asarray(t, dtype=float)
        if np.iscomplexobj(self.values):
            return np.interp(t, self.t_grid, self.values.real) + 1j * np.interp(
                t, self.t_grid, self.values.imag
            )
        return np.interp(t, self.t_grid, self.values)

    def integral(self) -> complex | float:
        return integrate.trapezoid(self.values, self.t_grid)

    def lipschitz_constant(self) -> float:
        return float(np.max(np.abs(np.diff(self.values))) / self.step)

    def sup_distance(self, other: "SampledFunction") -> float:
        return float(np.max(np.abs(self.values - other(self.t_grid))))

    def l1_distance(self, other: "SampledFunction") -> float:
        return float(integrate.trapezoid(np.abs(self.values - other(self.t_grid)), self.t_grid))

    def with_values(self, values: np.ndarray) -> "SampledFunction":
        return SampledFunction(t_grid=self.t_grid, values=values)


@dataclass(frozen=True, eq=False)
class SmoothingKernel:
    """
    ϑ_δ(t) = δ⁻²ϑ(t/δ²), whose transform ϑ̂(δ²ξ) vanishes outside [−δ⁻², δ⁻²].

    Attributes:
        delta: Scale in (0, 1]
        profile: ϑ_δ sampled on [−T, T]
        ft_profile: ϑ̂_δ sampled on a frequency grid that extends past the support
    """

    delta: float
    profile: SampledFunction
    ft_profile: SampledFunction

    @property
    def bandwidth(self) -> float:
        return self.delta**-2

    @property
    def window(self) -> float:
        return min(self.profile.half_width, CONVOLUTION_WINDOW * self.delta**2)

    def density(self, t: np.ndarray | float) -> np.ndarray:
        d2 = self.delta**2
        return base_density(np.asarray(t, dtype=float) / d2) / d2

    def transform(self, xi: np.ndarray | float) -> np.ndarray:
        return base_transform(self.delta**2 * np.asarray(xi, dtype=float))

    def tail_mass(self, radius: float | None = None) -> float:
        """∫_{|t| ≥ radius} ϑ_δ, radius δ by default."""
        radius = self.delta if radius is None else radius
        inside = np.abs(self.profile.t_grid) < radius
        return float(1.0 - integrate.trapezoid(self.profile.values * inside, self.profile.t_grid))


def make_kernel(delta: float) -> SmoothingKernel:
    """
    Build ϑ_δ and its transform.

    Raises:
        PreconditionError: Unless 0 < delta ≤ 1
    """
    if not 0.0 < delta <= 1.0:
        raise PreconditionError(f"delta must lie in (0, 1], got {delta}")
    d2 = delta * delta
    half_width = max(GRID_HALF_WIDTH_LINEAR * delta, GRID_HALF_WIDTH_QUADRATIC * d2)
    profile = SampledFunction.from_callable(
        lambda t: base_density(t / d2) / d2, half_width, GRID_STEP_FACTOR * d2
    )
    ft_profile = SampledFunction.from_callable(
        lambda xi: base_transform(d2 * xi), 1.5 / d2, 1e-3 / d2
    )
    return SmoothingKernel(delta=delta, profile=profile, ft_profile=ft_profile)


def fourier_transform(f: SampledFunction, xi: np.ndarray | float) -> np.ndarray:
    """f̂(ξ) = ∫ f(t) e^{−iξt} dt by trapezoidal quadrature on f's grid."""
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    phases = np.exp(-1j * np.outer(xi, f.t_grid))
    return integrate.trapezoid(phases * f.values[None, :], f.t_grid, axis=1)


def plancherel_check(kernel: SmoothingKernel) -> tuple[float, float, float]:
    """
    ∫ϑ_δ² in time against (1/2π)∫ϑ̂_δ² in frequency.

    Returns:
        (time value, frequency value, relative difference)
    """
    in_time = float(integrate.trapezoid(kernel.profile.values**2, kernel.profile.t_grid))
    xi = np.linspace(-kernel.bandwidth, kernel.bandwidth, 20_001)
    in_frequency = float(integrate.trapezoid(kernel.transform(xi) ** 2, xi)) / (2.0 * math.pi)
    return in_time, in_frequency, abs(in_time - in_frequency) / in_frequency


@dataclass(frozen=True)
class KernelRow:
    """Property table row for one δ."""

    delta: float
    mass: float
    support_violation: float
    tail: float
    tail_ratio: float
    plancherel_error: float
    ft_imag_max: float
    transform_error: float
    symmetric: bool

    @property
    def passed(self) -> bool:
        return (
            abs(self.mass - 1.0) <= 1e-6
            and self.support_violation <= 1e-8
            and self.plancherel_error <= 1e-4
            and self.ft_imag_max <= 1e-10
            and self.symmetric
        )


def kernel_report(deltas: Sequence[float]) -> tuple[KernelRow, ...]:
    """Mass, support, tail, Plancherel and symmetry checks for each δ."""
    rows = []
    for delta in deltas:
        kernel = make_kernel(delta)
        ft = kernel.ft_profile
        outside = np.abs(ft.t_grid) > kernel.bandwidth
        probe = np.linspace(-kernel.bandwidth, kernel.bandwidth, 33)
        quadrature = fourier_transform(kernel.profile, probe)
        tail = kernel.tail_mass()
        rows.append(
            KernelRow(
                delta=float(delta),
                mass=float(kernel.profile.integral()),
                support_violation=float(np.max(np.abs(ft.values[outside]), initial=0.0)),
                tail=tail,
                tail_ratio=tail / delta**2,
                plancherel_error=plancherel_check(kernel)[2],
                ft_imag_max=float(np.max(np.abs(quadrature.imag))),
                transform_error=float(np.max(np.abs(quadrature.real - kernel.transform(probe)))),
                symmetric=bool(np.allclose(kernel.profile.values, kernel.profile.values[::-1])),
            )
        )
        logger.debug(f"Kernel delta={delta}: mass={rows[-1].mass:.9f}, tail={tail:.3e}")
    return tuple(rows)


def _discrete_kernel(density: Callable, step: float, window: float) -> np.ndarray:
    half = int(math.ceil(window / step))
    weights = density(np.arange(-half, half + 1) * step)
    return weights / weights.sum()


def _convolve(values: np.ndarray, weights: np.ndarray, pad_mode: str) -> np.ndarray:
    half = weights.size // 2
    if pad_mode == "zero":
        padded = np.pad(values, half)
    else:
        padded = np.pad(values, half, mode="reflect", reflect_type="odd")
    return signal.fftconvolve(padded, weights, mode="valid")


def smooth(psi: SampledFunction, kernel: SmoothingKernel) -> SampledFunction:
    """
    The convolution ψ * ϑ_δ on ψ's grid.

    The kernel is sampled at ψ's grid offsets and rescaled to unit discrete
    mass; ψ is continued past its grid by point reflection, so affine
    functions are reproduced exactly.

    Raises:
        GridMismatchError: If the kernel grid is finer than ψ's grid
        PreconditionError: If ψ is not 1-Lipschitz on its grid
    """
    if kernel.profile.step < psi.step * (1.0 - 1e-9):
        raise GridMismatchError(
            f"Kernel step {kernel.profile.step:.3g} is finer than the function step {psi.step:.3g}"
        )
    if psi.lipschitz_constant() > 1.0 + 1e-9:
        raise PreconditionError(
            f"smooth needs a 1-Lipschitz function, got {psi.lipschitz_constant():.4g}"
        )
    weights = _discrete_kernel(kernel.density, psi.step, kernel.window)
    return psi.with_values(_convolve(psi.values, weights, pad_mode="reflect"))


def _bracket_nonnegative(
    g: np.ndarray, kernel_weights: np.ndarray, spread: int, envelope: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Upper and lower band-limited brackets of a nonnegative compactly supported g."""
    size = 2 * spread + 1
    dilated = ndimage.maximum_filter1d(g, size, mode="constant")
    upper_core = _convolve(dilated, kernel_weights, "zero")
    eroded = ndimage.minimum_filter1d(g, size, mode="constant")
    lower_core = _convolve(eroded, kernel_weights, "zero")

    def scale(excess: np.ndarray) -> float:
        ratios = np.where(excess > 0.0, excess / envelope, 0.0)
        worst = float(ratios.max(initial=0.0))
        return worst * (1.0 + BRACKET_SLACK) + 1e-15 if worst > 0.0 else 0.0

    upper = upper_core + scale(g - upper_core) * envelope
    lower = lower_core - scale(lower_core - g) * envelope
    return upper, lower


def approx_pm(psi: SampledFunction, delta: float) -> tuple[SampledFunction, SampledFunction]:
    """
    Band-limited approximants ψ⁻ ≤ ψ ≤ ψ⁺ with transforms in [−δ⁻², δ⁻²].

    Positive and negative parts are treated separately. For g ≥ 0 the upper
    bracket smooths the running maximum of g over radius δ with ϑ_δ and adds
    a multiple of B = ϑ₁ * 1_E, E being the support of ψ enlarged by δ; the
    lower bracket uses the running minimum and subtracts. The multiples are
    the worst shortfalls on the grid, so bracketing holds at every node.

    Returns:
        (psi_minus, psi_plus) on ψ's grid

    Raises:
        PreconditionError: If ‖ψ‖_∞ > 1, ψ is complex, or ψ does not vanish at the grid ends
    """
    if np.iscomplexobj(psi.values) or np.max(np.abs(psi.values)) > 1.0 + 1e-12:
        raise PreconditionError("approx_pm needs a real function with sup norm at most 1")
    if psi.values[0] != 0.0 or psi.values[-1] != 0.0:
        raise PreconditionError("approx_pm needs a function supported inside its grid")
    kernel = make_kernel(delta)
    step = psi.step
    spread = int(math.ceil(delta / step))
    support = ndimage.maximum_filter1d((psi.values != 0.0).astype(float), 2 * spread + 1)
    if not support.any():
        zero = psi.with_values(np.zeros_like(psi.values))
        return zero, zero

    kernel_weights = _discrete_kernel(kernel.density, step, kernel.window)
    unit_weights = _discrete_kernel(base_density, step, psi.half_width)
    envelope = _convolve(support, unit_weights, "zero")
    envelope = np.maximum(envelope, np.finfo(float).tiny)

    positive = np.maximum(psi.values, 0.0)
    negative = np.maximum(-psi.values, 0.0)
    pos_upper, pos_lower = _bracket_nonnegative(positive, kernel_weights, spread, envelope)
    neg_upper, neg_lower = _bracket_nonnegative(negative, kernel_weights, spread, envelope)
    plus = psi.with_values(pos_upper - neg_lower)
    minus = psi.with_values(pos_lower - neg_upper)
    logger.debug(
        f"approx_pm delta={delta}: L1(plus)={plus.l1_distance(psi):.3e}, "
        f"L1(minus)={minus.l1_distance(psi):.3e}"
    )
    return minus, plus


def conj_char(samples: Sequence[float] | np.ndarray, xi: float) -> complex:
    """
    Empirical conjugate characteristic function (1/M) Σ e^{−iξX_j}.

    Raises:
        EmptySampleError: If there are no samples
    """
    values = np.asarray(samples, dtype=float)
    if values.size == 0:
        raise EmptySampleError("conj_char needs at least one sample")
    if xi == 0.0:
        return 1.0 + 0j
    return complex(np.mean(np.exp(-1j * xi * values)))


def empirical_char(samples: Sequence[float] | np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
    """Vectorized ξ ↦ conj_char(samples, ξ)."""
    values = np.asarray(samples, dtype=float)
    if values.size == 0:
        raise EmptySampleError("empirical_char needs at least one sample")

    def phi(xi: np.ndarray) -> np.ndarray:
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        out = np.empty(xi.size, dtype=complex)
        for i, x in enumerate(xi):
            out[i] = conj_char(values, float(x))
        return out

    return phi


def pv_be_functional(
    phi_F: Callable[[np.ndarray], np.ndarray],
    h_hat: Callable[[np.ndarray], np.ndarray],
    kernel: SmoothingKernel,
    t_range: Sequence[float] | np.ndarray,
    integration_grid: int = 4001,
) -> float:
    """
    (1/π)·sup_t |∫₀^{δ⁻²} (Θ_t(ξ) − Θ_t(−ξ))/ξ dξ| with Θ_t(ξ) = e^{itξ}(φ_F − ĥ)(ξ)ϑ̂_δ(ξ).

    The symmetrized integrand has a removable singularity at 0; its value
    there is extrapolated from the first two nodes.

    Args:
        phi_F: Conjugate characteristic function of F (vectorized)
        h_hat: Transform of the reference density (vectorized)
        kernel: Smoothing kernel; fixes the upper limit δ⁻²
        t_range: Points t over which the supremum is taken
        integration_grid: Number of uniform ξ nodes on [0, δ⁻²]

    Raises:
        SingularityError: If the integrand exceeds 1e6 near ξ = 0
    """
    xi = np.linspace(0.0, kernel.bandwidth, integration_grid)[1:]
    weight = kernel.transform(xi)
    difference_pos = np.asarray(phi_F(xi)) - np.asarray(h_hat(xi))
    difference_neg = np.asarray(phi_F(-xi)) - np.asarray(h_hat(-xi))
    t = np.asarray(t_range, dtype=float)
    phase = np.exp(1j * np.outer(t, xi))
    integrand = weight * (phase * difference_pos - np.conj(phase) * difference_neg) / xi

    near_zero = np.abs(integrand[:, : min(10, xi.size)])
    if not np.all(np.isfinite(near_zero)) or near_zero.max(initial=0.0) > SINGULARITY_LIMIT:
        raise SingularityError("Symmetrized integrand is unbounded near 0")
    at_zero = 2.0 * integrand[:, 0] - integrand[:, 1]
    nodes = np.concatenate([[0.0], xi])
    full = np.concatenate([at_zero[:, None], integrand], axis=1)
    values = np.abs(integrate.trapezoid(full, nodes, axis=1))
    return float(values.max(initial=0.0) / math.pi)

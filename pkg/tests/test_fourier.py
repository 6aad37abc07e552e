# ABOUTME: Tests for the smoothing kernel, convolution, approximants and characteristic functions
# ABOUTME: Checks mass, band limits, bracketing, exactness on affine functions and the PV functional

import math

import numpy as np
import pytest

from cocyclelab.errors import EmptySampleError, GridMismatchError, PreconditionError
from cocyclelab.fourier import (
    SampledFunction,
    approx_pm,
    base_density,
    base_transform,
    conj_char,
    empirical_char,
    fourier_transform,
    kernel_report,
    make_kernel,
    plancherel_check,
    pv_be_functional,
    smooth,
)


def triangle(half_width: float = 3.0, step: float = 0.002) -> SampledFunction:
    return SampledFunction.from_callable(
        lambda t: np.maximum(0.0, 1.0 - np.abs(t)), half_width, step
    )


def gaussian_char(shift: float):
    return lambda xi: np.exp(-1j * xi * shift - 0.5 * xi * xi)


class TestBaseProfile:
    """Tests for ϑ and its closed-form transform."""

    def test_transform_at_zero_is_one(self):
        """ϑ̂(0) = 1 matches unit mass."""
        assert float(base_transform(0.0)) == pytest.approx(1.0)

    def test_transform_support(self):
        """ϑ̂ vanishes for |ξ| ≥ 1."""
        assert np.all(base_transform(np.array([1.0, -1.0, 1.5, 7.0])) == 0.0)

    def test_density_is_even_and_positive(self):
        """ϑ(t) = ϑ(−t) ≥ 0."""
        t = np.linspace(0.0, 30.0, 301)
        assert np.allclose(base_density(t), base_density(-t), rtol=1e-14, atol=0.0)
        assert np.all(base_density(t) >= 0.0)

    def test_quadrature_transform_agrees(self):
        """Direct quadrature reproduces the closed form."""
        profile = SampledFunction.from_callable(base_density, 2000.0, 0.1)
        xi = np.array([0.0, 0.25, 0.5, 0.9])
        assert fourier_transform(profile, xi).real == pytest.approx(base_transform(xi), abs=1e-6)


class TestKernel:
    """Tests for ϑ_δ."""

    @pytest.mark.parametrize("delta", [0.0, -0.1, 1.5])
    def test_delta_range(self, delta):
        """δ must lie in (0, 1]."""
        with pytest.raises(PreconditionError):
            make_kernel(delta)

    def test_report_rows_pass(self):
        """Mass, support, Plancherel and symmetry hold for each δ."""
        rows = kernel_report([0.5, 0.2])
        assert [row.delta for row in rows] == [0.5, 0.2]
        for row in rows:
            assert row.passed
            assert row.mass == pytest.approx(1.0, abs=1e-6)
            assert row.support_violation == 0.0

    def test_tail_ratio_is_bounded(self):
        """∫_{|t|≥δ} ϑ_δ / δ² stays below one constant across scales."""
        rows = kernel_report([1.0, 0.5, 0.2, 0.1])
        assert max(row.tail_ratio for row in rows) < 4.0

    def test_plancherel(self):
        """∫ϑ_δ² agrees in time and frequency."""
        _, _, relative = plancherel_check(make_kernel(0.5))
        assert relative <= 1e-4

    def test_bandwidth(self):
        """ϑ̂_δ is supported on [−δ⁻², δ⁻²]."""
        kernel = make_kernel(0.5)
        assert kernel.bandwidth == pytest.approx(4.0)
        assert float(kernel.transform(4.0)) == 0.0
        assert float(kernel.transform(2.0)) > 0.0


class TestSampledFunction:
    """Tests for grid functions."""

    def test_interpolation_extends_edges(self):
        """Values beyond the grid repeat the end values."""
        f = SampledFunction.from_callable(lambda t: t, 1.0, 0.5)
        assert f(np.array([0.25, 2.0, -3.0])) == pytest.approx([0.25, 1.0, -1.0])

    def test_integral(self):
        """Trapezoid integral of the triangle is 1."""
        assert triangle().integral() == pytest.approx(1.0, abs=1e-6)

    def test_non_uniform_grid_rejected(self):
        """Grids must be uniform."""
        with pytest.raises(PreconditionError, match="uniform"):
            SampledFunction(t_grid=np.array([0.0, 1.0, 3.0]), values=np.zeros(3))


class TestSmooth:
    """Tests for ψ * ϑ_δ."""

    def test_affine_functions_are_reproduced(self):
        """Point reflection keeps affine functions exact."""
        psi = SampledFunction.from_callable(lambda t: 0.5 * t + 0.2, 5.0, 0.01)
        smoothed = smooth(psi, make_kernel(0.5))
        assert smoothed.sup_distance(psi) <= 1e-8

    def test_deviation_is_second_order(self):
        """sup|ψ * ϑ_δ − ψ| / δ² stays bounded for a clamp."""
        psi = SampledFunction.from_callable(lambda t: np.clip(t, 0.0, 1.0), 4.0, 0.25**2 / 10)
        ratios = [
            smooth(psi, make_kernel(delta)).sup_distance(psi) / delta**2 for delta in (0.5, 0.25)
        ]
        assert max(ratios) <= 2.0
        assert min(ratios) > 0.0

    def test_grid_mismatch(self):
        """A kernel sampled finer than ψ is rejected."""
        psi = SampledFunction.from_callable(lambda t: np.clip(t, 0.0, 1.0), 4.0, 0.1)
        with pytest.raises(GridMismatchError):
            smooth(psi, make_kernel(0.5))

    def test_lipschitz_precondition(self):
        """ψ must be 1-Lipschitz."""
        psi = SampledFunction.from_callable(lambda t: 3.0 * t, 2.0, 0.01)
        with pytest.raises(PreconditionError, match="Lipschitz"):
            smooth(psi, make_kernel(0.5))


class TestApproxPm:
    """Tests for the two-sided band-limited approximants."""

    def test_bracketing(self):
        """ψ⁻ ≤ ψ ≤ ψ⁺ at every node."""
        psi = triangle()
        minus, plus = approx_pm(psi, 0.2)
        assert np.all(minus.values <= psi.values + 1e-9)
        assert np.all(plus.values >= psi.values - 1e-9)

    def test_l1_error_shrinks(self):
        """Smaller δ gives closer approximants."""
        psi = triangle()
        errors = []
        for delta in (0.4, 0.2, 0.1):
            minus, plus = approx_pm(psi, delta)
            errors.append(plus.l1_distance(psi) + minus.l1_distance(psi))
        assert errors[1] <= 1.1 * errors[0]
        assert errors[2] <= 1.1 * errors[1]

    def test_zero_function(self):
        """ψ ≡ 0 gives zero approximants."""
        psi = SampledFunction.from_callable(np.zeros_like, 2.0, 0.01)
        minus, plus = approx_pm(psi, 0.2)
        assert np.all(minus.values == 0.0) and np.all(plus.values == 0.0)

    def test_preconditions(self):
        """Sup norm above 1 or mass at the grid ends is rejected."""
        tall = SampledFunction.from_callable(
            lambda t: 2.0 * np.maximum(0.0, 1.0 - np.abs(t)), 3.0, 0.01
        )
        with pytest.raises(PreconditionError):
            approx_pm(tall, 0.2)
        edge = SampledFunction.from_callable(lambda t: np.full_like(t, 0.5), 3.0, 0.01)
        with pytest.raises(PreconditionError):
            approx_pm(edge, 0.2)


class TestCharacteristicFunctions:
    """Tests for empirical conjugate characteristic functions."""

    def test_zero_frequency(self):
        """ξ = 0 gives exactly 1."""
        assert conj_char([0.3, -1.0, 7.0], 0.0) == 1.0

    def test_point_mass_at_zero(self):
        """All samples at 0 give 1 for every ξ."""
        assert conj_char(np.zeros(10), 3.7) == pytest.approx(1.0)

    def test_gaussian_samples(self):
        """Standard Gaussian samples give e^{−ξ²/2}."""
        samples = np.random.default_rng(0).standard_normal(1_000_000)
        assert abs(conj_char(samples, 1.0) - math.exp(-0.5)) <= 0.005

    def test_factorizes_for_independent_sums(self):
        """φ_{X+Y} ≈ φ_X·φ_Y for independent samples."""
        rng = np.random.default_rng(1)
        x, y = rng.exponential(size=200_000), rng.uniform(-1.0, 1.0, size=200_000)
        for xi in (0.3, 1.0):
            product = conj_char(x, xi) * conj_char(y, xi)
            assert conj_char(x + y, xi) == pytest.approx(product, abs=0.01)

    def test_empty_samples(self):
        """No samples raise EmptySampleError."""
        with pytest.raises(EmptySampleError):
            conj_char([], 1.0)
        with pytest.raises(EmptySampleError):
            empirical_char(np.array([]))

    def test_vectorized_matches_scalar(self):
        """empirical_char evaluates conj_char pointwise."""
        samples = np.array([0.1, 0.5, -0.3])
        phi = empirical_char(samples)
        assert phi(np.array([0.0, 2.0]))[1] == pytest.approx(conj_char(samples, 2.0))


class TestPrincipalValueFunctional:
    """Tests for the symmetrized principal-value functional."""

    def test_identical_laws_give_zero(self):
        """F = H makes the integrand vanish."""
        value = pv_be_functional(
            gaussian_char(0.0), gaussian_char(0.0), make_kernel(0.5), np.linspace(-4, 4, 41)
        )
        assert value == 0.0

    def test_grows_with_shift(self):
        """The functional increases with the shift of a Gaussian."""
        kernel = make_kernel(0.5)
        t_range = np.linspace(-4.0, 4.0, 81)
        values = [
            pv_be_functional(gaussian_char(a), gaussian_char(0.0), kernel, t_range)
            for a in (0.01, 0.02, 0.04)
        ]
        assert values[0] > 0.0
        assert values[0] < values[1] < values[2]

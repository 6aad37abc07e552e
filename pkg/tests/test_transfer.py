# ABOUTME: Tests for discretized transfer operators and the spectral quantities built on them
# ABOUTME: Scalar measures give closed forms; a generic measure checks gaps, expansions, tilting

import math

import numpy as np
import pytest

from cocyclelab.errors import DegenerateVarianceError, DimensionError, PreconditionError
from cocyclelab.projgeom import angles_of
from cocyclelab.randwalk import MeasureSpec, empirical_stationary, run_walks
from cocyclelab.transfer import (
    NU_CACHE_SIZE,
    CircleGrid,
    TiltedSampler,
    _solve_stationary,
    build_operator,
    cramer_zeta,
    eigenvalue_bound_check,
    lambda_expansion_check,
    lambda_real_derivatives,
    large_xi_decay,
    left_eigenvector,
    log_lambda,
    scgf_check,
    solve_tilt,
    spectral_at,
    stationary_vector,
    tilt_weights_batch,
)


@pytest.fixture
def grid() -> CircleGrid:
    return CircleGrid(m=256)


@pytest.fixture
def generic_gammas(generic_measure, grid):
    return lambda_real_derivatives(generic_measure, grid, order=2).gammas


class TestCircleGrid:
    """Tests for the node set and interpolation stencils."""

    def test_minimum_size(self):
        """Fewer than 64 nodes are rejected."""
        with pytest.raises(PreconditionError):
            CircleGrid(m=32)

    def test_order(self):
        """Only linear and cubic interpolation exist."""
        with pytest.raises(PreconditionError):
            CircleGrid(m=128, order=2)

    def test_points_are_unit_vectors(self, grid):
        """Nodes are unit representatives in [0, π)."""
        assert np.allclose(np.linalg.norm(grid.points, axis=1), 1.0)
        assert grid.angles[-1] < math.pi

    @pytest.mark.parametrize("order,tolerance", [(1, 1e-4), (3, 1e-6)])
    def test_interpolation_accuracy(self, order, tolerance):
        """Interpolating cos 2θ is accurate to the order of the stencil."""
        grid = CircleGrid(m=256, order=order)
        angles = np.random.default_rng(3).uniform(0.0, math.pi, 500)
        values = grid.interpolate(np.cos(2.0 * grid.angles), angles)
        assert np.max(np.abs(values - np.cos(2.0 * angles))) <= tolerance

    def test_interpolation_is_periodic(self, grid):
        """Angles θ and θ + π give the same value."""
        values = np.sin(2.0 * grid.angles)
        angles = np.array([0.3, 1.7])
        assert grid.interpolate(values, angles) == pytest.approx(
            grid.interpolate(values, angles + math.pi)
        )


class TestBuildOperator:
    """Tests for operator assembly."""

    def test_dimension(self, grid):
        """Only 2×2 measures have a circle transfer operator."""
        mu = MeasureSpec.from_literal([([[2.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]], 1.0)])
        with pytest.raises(DimensionError):
            build_operator(mu, 0.0, grid)

    def test_real_part_window(self, generic_measure, grid):
        """|Re z| > 0.5 is rejected."""
        with pytest.raises(PreconditionError):
            build_operator(generic_measure, 0.6, grid)

    def test_markov_rows(self, generic_measure, grid):
        """P_0 has unit row sums."""
        op = build_operator(generic_measure, 0.0, grid)
        assert np.allclose(op.apply(np.ones(grid.m)), 1.0, atol=1e-12)


class TestLeadingEigen:
    """Tests for the leading eigenpair and the spectral gap."""

    def test_unperturbed_eigenvalue_is_one(self, generic_measure, grid):
        """λ_0 = 1 exactly, with a gap below one."""
        data = spectral_at(generic_measure, 0.0, grid, with_gap=True)
        assert data.lambda_z == 1.0
        assert 0.0 < data.gap < 1.0

    def test_stationary_vector(self, generic_measure, grid):
        """ν̂ is a probability vector."""
        nu = spectral_at(generic_measure, 0.0, grid).nu_hat
        assert np.all(nu >= 0.0)
        assert nu.sum() == pytest.approx(1.0)

    def test_stationary_vector_matches_walks(self, generic_measure, grid, e1):
        """ν̂ and the empirical law of one long trajectory are within 0.05 in KS distance."""
        cumulative = np.cumsum(stationary_vector(generic_measure, grid))
        sample = empirical_stationary(generic_measure, e1, 1000, 50_000, seed=5)
        angles = np.sort(angles_of(sample.reps))
        model = cumulative[np.searchsorted(grid.angles, angles, side="right") - 1]
        count = angles.size
        above = np.arange(1, count + 1) / count - model
        below = model - np.arange(count) / count
        assert max(above.max(), below.max()) <= 0.05

    def test_stationary_vector_cache(self, grid):
        """Equal measures share one cached ν̂ and the cache is bounded."""
        atoms = [([[2.0, 1.0], [1.0, 1.0]], 0.5), ([[1.0, -1.0], [1.0, 2.0]], 0.5)]
        first, second = MeasureSpec.from_literal(atoms), MeasureSpec.from_literal(atoms)
        assert stationary_vector(first, grid) is stationary_vector(second, grid)
        assert stationary_vector(first, CircleGrid(m=128)) is not stationary_vector(first, grid)
        assert _solve_stationary.cache_info().maxsize == NU_CACHE_SIZE

    def test_normalization(self, generic_measure, grid):
        """⟨ν̂, r_z⟩ = 1 and the residual meets the tolerance."""
        data = spectral_at(generic_measure, 0.2j, grid)
        assert complex(data.nu_hat @ data.r_z) == pytest.approx(1.0, abs=1e-9)
        assert data.residual <= 1e-10

    def test_left_eigenvector_at_zero(self, generic_measure, grid):
        """The adjoint iteration at z = 0 recovers ν̂."""
        op = build_operator(generic_measure, 0.0, grid)
        data = spectral_at(generic_measure, 0.0, grid)
        left = left_eigenvector(op, data.lambda_z, data.r_z)
        np.testing.assert_allclose(np.conj(left).real, data.nu_hat, atol=1e-8)

    def test_imaginary_window(self, generic_measure, grid):
        """Eigen-solves need |Im z| ≤ 0.5."""
        with pytest.raises(PreconditionError):
            spectral_at(generic_measure, 0.6j, grid)

    def test_modulus_below_one_off_zero(self, generic_measure, grid):
        """|λ_{iξ}| < 1 for ξ ≠ 0."""
        assert abs(spectral_at(generic_measure, 0.3j, grid).lambda_z) < 1.0

    def test_scalar_measure_closed_form(self, scalar_measure, grid):
        """For μ = δ_{2I}, Λ(s) = s·log 2."""
        for s in (-0.4, 0.1, 0.5):
            expected = s * math.log(2.0)
            assert log_lambda(scalar_measure, grid, s) == pytest.approx(expected, abs=1e-12)


class TestDerivatives:
    """Tests for the finite-difference cumulants."""

    def test_scalar_measure(self, scalar_measure, grid):
        """γ = log 2 and ϱ² = 0 for a scalar measure."""
        result = lambda_real_derivatives(scalar_measure, grid, order=2)
        assert result.gammas[0] == pytest.approx(math.log(2.0), abs=1e-9)
        assert result.gammas[1] == pytest.approx(0.0, abs=1e-7)

    def test_generic_measure_positive_variance(self, generic_gammas):
        """The generic measure has γ > 0 and ϱ² > 0."""
        gamma, rho2 = generic_gammas
        assert gamma > 0.0
        assert rho2 > 0.0

    @pytest.mark.parametrize("order,h", [(0, 0.05), (6, 0.05), (2, 0.5)])
    def test_parameter_ranges(self, generic_measure, grid, order, h):
        """order ∈ 1..5 and h ∈ [1e-3, 5e-2]."""
        with pytest.raises(PreconditionError):
            lambda_real_derivatives(generic_measure, grid, order=order, h=h)

    def test_expansion_order(self, generic_measure, grid, generic_gammas):
        """λ_{iξ} matches its second-order expansion up to O(|ξ|³)."""
        xi = [-0.3, -0.2, -0.1, -0.05, 0.05, 0.1, 0.2, 0.3]
        report = lambda_expansion_check(generic_measure, grid, xi, *generic_gammas)
        assert report.passed

    def test_expansion_needs_enough_points(self, generic_measure, grid):
        """Short or too wide ξ-grids are rejected."""
        with pytest.raises(PreconditionError):
            lambda_expansion_check(generic_measure, grid, [0.1, 0.2], 0.5, 0.5)


class TestCramerZeta:
    """Tests for the truncated Cramér series."""

    def test_gaussian_cumulants(self):
        """Vanishing higher cumulants give ζ ≡ 0."""
        assert cramer_zeta([1.0, 0.0, 0.0, 0.0], 0.3) == 0.0

    def test_coefficients(self):
        """γ₂ = γ₃ = 1 gives 1/6 − t/8 + t²/8."""
        t = 0.2
        assert cramer_zeta([1.0, 1.0, 0.0, 0.0], t) == pytest.approx(1 / 6 - t / 8 + t * t / 8)

    def test_constant_term(self):
        """γ₂ = 1, γ₃ = 6 gives ζ(0) = γ₃/(6γ₂^{3/2}) = 1."""
        assert cramer_zeta([1.0, 6.0], 0.0) == pytest.approx(1.0)

    def test_linear_term(self):
        """γ₂ = 1, γ₃ = 0, γ₄ = 24 gives ζ(t) = t, so ζ(1) = 1."""
        assert cramer_zeta([1.0, 0.0, 24.0, 0.0], 1.0) == pytest.approx(1.0)
        assert cramer_zeta([1.0, 0.0, 24.0], 0.5) == pytest.approx(0.5)

    def test_degenerate_variance(self):
        """γ₂ ≤ 0 raises."""
        with pytest.raises(DegenerateVarianceError):
            cramer_zeta([0.0, 1.0, 1.0, 1.0], 0.1)


class TestTilting:
    """Tests for the change of measure at real s."""

    def test_zero_shift(self, generic_measure, grid):
        """No shift needs no tilt."""
        assert solve_tilt(generic_measure, grid, 0.5, 0.0) == 0.0

    def test_solved_tilt_hits_shift(self, generic_measure, grid, generic_gammas):
        """Λ′(s) − γ equals the requested shift."""
        gamma = generic_gammas[0]
        s = solve_tilt(generic_measure, grid, gamma, 0.05)
        assert s > 0.0
        step = 1e-4
        upper = log_lambda(generic_measure, grid, s + step)
        lower = log_lambda(generic_measure, grid, s - step)
        slope = (upper - lower) / (2 * step)
        assert slope - gamma == pytest.approx(0.05, abs=1e-6)

    def test_unreachable_shift(self, generic_measure, grid, generic_gammas):
        """Shifts beyond Λ′ on the window raise."""
        with pytest.raises(PreconditionError):
            solve_tilt(generic_measure, grid, generic_gammas[0], 100.0)

    def test_weights_are_one_for_scalar_measure(self, scalar_measure, grid, e1):
        """e^{sσ}/λ_s^n is identically one when σ is deterministic."""
        batch = run_walks(scalar_measure, e1, 10, 50, seed=1)
        weights = tilt_weights_batch(spectral_at(scalar_measure, 0.3, grid), batch, e1)
        assert weights == pytest.approx(np.ones(50), rel=1e-9)

    def test_weights_average_to_one(self, generic_measure, grid, e1):
        """q_n^s has mean one over untilted walks."""
        batch = run_walks(generic_measure, e1, 20, 20_000, seed=7)
        weights = tilt_weights_batch(spectral_at(generic_measure, 0.2, grid), batch, e1)
        stderr = weights.std(ddof=1) / math.sqrt(weights.size)
        assert abs(weights.mean() - 1.0) <= 5.0 * stderr + 0.01

    def test_complex_tilt_rejected(self, generic_measure, grid, e1):
        """Tilts must be real."""
        with pytest.raises(PreconditionError):
            TiltedSampler(generic_measure, spectral_at(generic_measure, 0.1j, grid))

    def test_sampler_weights(self, scalar_measure, grid):
        """Step weights of a scalar measure are 2^s for every state."""
        sampler = TiltedSampler(scalar_measure, spectral_at(scalar_measure, 0.5, grid))
        weights = sampler.step_weights(grid.points[:5])
        assert weights == pytest.approx(np.full((5, 1), math.sqrt(2.0)))

    @pytest.mark.parametrize("s", [-0.2, -0.1, 0.1, 0.2])
    def test_scgf_matches_log_lambda(self, generic_measure, grid, e1, s):
        """(1/n) log E e^{sσ_n} approaches log λ_s on both sides of 0."""
        spectral = spectral_at(generic_measure, s, grid)
        report = scgf_check(generic_measure, e1, s, 50, 4000, spectral, seed=3)
        assert report.s == s
        assert report.passed

    def test_scgf_window(self, generic_measure, grid, e1):
        """|s| > 0.3 is rejected."""
        spectral = spectral_at(generic_measure, 0.4, grid)
        with pytest.raises(PreconditionError):
            scgf_check(generic_measure, e1, 0.4, 10, 100, spectral, seed=3)


class TestLargeXi:
    """Tests for decay away from ξ = 0 and the eigenvalue bound."""

    def test_generic_measure_decays(self, generic_measure, grid):
        """Iterates of P_{iξ} shrink geometrically."""
        report = large_xi_decay(generic_measure, grid, 2.0, [0, 10, 20, 30])
        assert report.rows[0] == (0, 1.0)
        assert report.rho_hat < 1.0
        assert not report.decay_fails

    def test_scalar_measure_does_not_decay(self, scalar_measure, grid):
        """An arithmetic cocycle keeps |P_{iξ}^n 1| = 1."""
        report = large_xi_decay(scalar_measure, grid, 2.0, [0, 10, 20])
        assert report.decay_fails

    def test_frequency_range(self, generic_measure, grid):
        """|ξ| must lie in [0.5, 20]."""
        with pytest.raises(PreconditionError):
            large_xi_decay(generic_measure, grid, 0.1, [1, 2])

    def test_eigenvalue_bound(self, generic_measure, grid, generic_gammas):
        """|λ_{iξ/√n}|^n ≤ e^{−ϱ²ξ²/3} inside the window."""
        rows = eigenvalue_bound_check(
            generic_measure, grid, 100, [0.5, 1.0, 2.0], generic_gammas[1]
        )
        assert all(row.passed for row in rows)

    def test_eigenvalue_bound_window(self, generic_measure, grid):
        """ξ/√n beyond the window is rejected."""
        with pytest.raises(PreconditionError):
            eigenvalue_bound_check(generic_measure, grid, 1, [1.0], 0.5)

# ABOUTME: Tests for admissible target functions and their empirical checks
# ABOUTME: Covers u ≡ 0 and log-distance, tail and Hölder properties, partition of unity, tail LDT

import math

import numpy as np
import pytest

from cocyclelab.admissible import (
    HOLDER_K_RANGE,
    HOLDER_UNIFORM_BOUND,
    BumpProfile,
    HolderProfile,
    PointPairs,
    check_partition,
    check_property1,
    check_property2,
    fit_logdist_constants,
    logdist_constants,
    pair_distances,
    partition,
    partition_holder_check,
    partition_holder_profile,
    sample_pairs,
    tail_ldt_probe,
    tilted_tail_probe,
    u_logdist,
    u_zero,
)
from cocyclelab.errors import PreconditionError, SingularInputError
from cocyclelab.projgeom import DualProjPoint, Extended, ProjPoint, ProjSample
from cocyclelab.randwalk import RegularityFit


@pytest.fixture
def uniform_sample() -> ProjSample:
    """Deterministic, evenly spaced points standing in for the uniform law on ℙ¹."""
    count = 20_000
    angles = np.pi * (np.arange(count) + 0.5) / count
    return ProjSample(np.column_stack([np.cos(angles), np.sin(angles)]))


@pytest.fixture
def logdist():
    return u_logdist(DualProjPoint.basis(1))


class TestConstructors:
    """Tests for u ≡ 0 and u = log δ(·, y)."""

    def test_zero_function(self, e1):
        """u ≡ 0 evaluates to zero everywhere with an empty singular set."""
        u = u_zero()
        assert u.eval(e1) == 0.0
        assert u.singular_set.kind == "empty"

    def test_logdist_values(self, logdist):
        """log δ(x, y) for y = e₂*."""
        assert logdist.eval(ProjPoint.basis(1)) == pytest.approx(0.0)
        assert logdist.eval(ProjPoint.from_angle(0.3)) == pytest.approx(math.log(math.sin(0.3)))

    def test_logdist_singular_point(self, logdist, e1):
        """Points of H_y take the value −∞."""
        assert logdist.eval(e1) is Extended.NEG_INF
        values = logdist.evaluate(np.array([[1.0, 0.0], [0.0, 1.0]]))
        assert list(np.ma.getmaskarray(values)) == [True, False]

    def test_invalid_constants(self):
        """Constants outside their ranges are rejected."""
        with pytest.raises(PreconditionError):
            u_zero(alpha_star=1.5)
        with pytest.raises(PreconditionError):
            u_zero(eta_star=0.0)

    def test_constants_from_fit(self):
        """A_* is the smallest envelope constant, at least 1."""
        fit = RegularityFit(
            eta_hat=1.0,
            c_hat=0.6,
            r_squared=1.0,
            radii=(0.25, 0.5, 1.0),
            masses=(0.5, 0.5, 1.0),
            degenerate=False,
        )
        assert logdist_constants(fit) == (1.0, 2.0)

    def test_non_positive_exponent_rejected(self):
        """Constants need a positive fitted exponent."""
        fit = RegularityFit(
            eta_hat=-0.5, c_hat=1.0, r_squared=0.5, radii=(0.1,), masses=(0.5,), degenerate=True
        )
        with pytest.raises(PreconditionError):
            logdist_constants(fit)

    def test_fit_constants_from_samples(self, uniform_sample):
        """The uniform law around a hyperplane has η close to 1."""
        radii = [1e-3, 3e-3, 1e-2, 3e-2, 0.1]
        eta, a_star = fit_logdist_constants(uniform_sample, DualProjPoint.basis(1), radii)
        assert eta == pytest.approx(1.0, abs=0.05)
        assert a_star >= 1.0


class TestProperty1:
    """Tests for the tail property."""

    def test_zero_function_passes(self, uniform_sample):
        """u ≡ 0 has no tail at any t > 0."""
        report = check_property1(u_zero(), uniform_sample, [0.5, 1.0, 3.0])
        assert report.passed
        assert all(row.tail == 0.0 for row in report.rows)

    def test_logdist_uniform_passes(self, logdist, uniform_sample):
        """ν{|log δ| ≥ t} ≈ (2/π)e^{−t} stays below e^{−t}."""
        report = check_property1(logdist, uniform_sample, [0.5, 1.0, 2.0, 4.0])
        assert report.passed

    def test_tiny_constant_fails(self, logdist, uniform_sample):
        """A_* = 1e-6 fails at t = 0, where the tail is 1."""
        report = check_property1(logdist.with_constants(a_star=1e-6), uniform_sample, [0.0])
        assert not report.passed

    def test_needs_enough_samples(self, uniform_sample):
        """Fewer than 10⁴ samples are refused."""
        with pytest.raises(PreconditionError):
            check_property1(u_zero(), uniform_sample[:100], [1.0])


class TestProperty2:
    """Tests for the weighted Hölder property."""

    def test_sampled_pairs_are_close(self, uniform_sample):
        """Pairs lie within the requested distance."""
        pairs = sample_pairs(uniform_sample, 500, 0.05, seed=4)
        assert len(pairs) == 500
        assert np.all(pair_distances(pairs.first, pairs.second) <= 0.05 + 1e-12)

    def test_logdist_passes(self, logdist, uniform_sample):
        """|log a − log b| ≤ |a − b|(1/a + 1/b) keeps every ratio below 1."""
        pairs = sample_pairs(uniform_sample, 2000, 0.05, seed=4)
        report = check_property2(logdist, pairs)
        assert report.passed
        assert report.pairs == 2000

    def test_singular_pair_rejected(self, logdist):
        """Pairs on H_y raise SingularInputError."""
        pairs = PointPairs(first=np.array([[1.0, 0.0]]), second=np.array([[0.0, 1.0]]))
        with pytest.raises(SingularInputError):
            check_property2(logdist, pairs)

    def test_empty_pairs(self, logdist):
        """No pairs give a zero ratio."""
        assert check_property2(logdist, []).max_ratio == 0.0


class TestPartition:
    """Tests for the bump profile and the partition of unity."""

    def test_bump_shape(self):
        """χ̃ is 1 on the plateau and 0 beyond 1 − plateau."""
        bump = BumpProfile()
        assert bump(np.array([0.0, 0.05, -0.1])) == pytest.approx([1.0, 1.0, 1.0])
        assert bump(np.array([0.9, -0.95, 1.5])) == pytest.approx([0.0, 0.0, 0.0])

    def test_neighbouring_bumps_sum_to_one(self):
        """χ̃(t) + χ̃(t − 1) = 1 on [0, 1]."""
        bump = BumpProfile()
        t = np.linspace(0.0, 1.0, 1001)
        assert np.max(np.abs(bump(t) + bump(t - 1.0) - 1.0)) <= 1e-14

    def test_derivative_matches_difference_quotient(self):
        """χ̃′ agrees with central differences away from the kinks."""
        bump = BumpProfile()
        t = np.array([-0.7, -0.4, 0.3, 0.6])
        h = 1e-6
        numeric = (bump(t + h) - bump(t - h)) / (2 * h)
        assert bump.derivative(t) == pytest.approx(numeric, abs=1e-6)

    def test_partition_of_unity(self, logdist, uniform_sample):
        """Σ_k χ_k = 1 at every regular point."""
        reps = uniform_sample.reps
        total = sum(partition(logdist, k).evaluate(reps) for k in range(-1, 15))
        assert np.max(np.abs(total - 1.0)) <= 1e-12

    def test_bump_vanishes_on_singular_set(self, logdist):
        """Infinite u lies outside every level set."""
        assert partition(logdist, 0).eval(ProjPoint.basis(0)) == 0.0

    def test_holder_check_alpha_range(self, logdist, uniform_sample):
        """α above α_* is rejected; valid α gives a finite ratio."""
        pairs = sample_pairs(uniform_sample, 200, 0.05, seed=1)
        with pytest.raises(PreconditionError):
            partition_holder_check(logdist, 2, 1.5, pairs)
        assert math.isfinite(partition_holder_check(logdist, 2, 1.0, pairs))

    def test_check_partition_logdist(self, logdist, uniform_sample):
        """Bumps sum to one, at most two overlap, and none leaks past |u + k| < 1."""
        report = check_partition(logdist, uniform_sample.reps)
        assert report.sum_residual <= 1e-12
        assert report.max_overlap <= 2
        assert report.support_violations == 0
        assert report.k_range[0] <= -2

    def test_check_partition_detects_wide_bumps(self, logdist, uniform_sample):
        """A bump reaching past |t| = 1 is counted as a support violation."""
        report = check_partition(logdist, uniform_sample.reps, BumpProfile(plateau=-0.2))
        assert report.support_violations > 0

    def test_check_partition_skips_singular_points(self, logdist):
        """Points of Σ_u carry no bumps; a sample made only of them is trivially fine."""
        report = check_partition(logdist, np.array([[1.0, 0.0], [-1.0, 0.0]]))
        assert report.support_violations == 0
        assert report.max_overlap == 0


class TestHolderProfile:
    """Tests for the Hölder ratios of χ_k across k."""

    def test_growth_relative_to_level_zero(self):
        """growth is the largest ratio over the one at k = 0."""
        profile = HolderProfile(rows=((0, 2.0), (5, 4.0), (-3, 1.0)), alpha=1.0)
        assert profile.growth == pytest.approx(2.0)
        assert profile.uniform

    def test_vanishing_ratios(self):
        """All-zero ratios have no growth."""
        profile = HolderProfile(rows=((0, 0.0), (1, 0.0)), alpha=1.0)
        assert profile.growth == 0.0
        assert profile.uniform

    def test_missing_base_is_not_uniform(self):
        """Positive ratios with nothing at k = 0 cannot be normalized."""
        profile = HolderProfile(rows=((0, 0.0), (4, 1.0)), alpha=1.0)
        assert profile.growth == math.inf
        assert not profile.uniform

    def test_runaway_growth_is_not_uniform(self):
        """Ratios that grow past the bound fail."""
        rows = ((0, 1.0), (10, 10.0 * HOLDER_UNIFORM_BOUND))
        assert not HolderProfile(rows=rows, alpha=1.0).uniform

    def test_zero_function_profile(self, uniform_sample):
        """Every χ_k of u ≡ 0 is constant, so every ratio vanishes."""
        pairs = sample_pairs(uniform_sample, 500, 0.05, seed=4)
        profile = partition_holder_profile(u_zero(), 1.0, pairs)
        assert [k for k, _ in profile.rows] == list(HOLDER_K_RANGE)
        assert len(profile.rows) == 21
        assert all(ratio == 0.0 for _, ratio in profile.rows)
        assert profile.growth == 0.0

    def test_logdist_profile_is_uniform(self, logdist, uniform_sample):
        """Normalized ratios of log δ(·, y) stay within the bound over k ∈ [−10, 10]."""
        pairs = sample_pairs(uniform_sample, 2000, 0.05, seed=4)
        profile = partition_holder_profile(logdist, 1.0, pairs)
        assert dict(profile.rows)[0] > 0.0
        assert profile.uniform
        assert profile.growth <= HOLDER_UNIFORM_BOUND

    def test_alpha_checked(self, logdist, uniform_sample):
        """α outside (0, α_*] is rejected before any work."""
        pairs = sample_pairs(uniform_sample, 10, 0.05, seed=4)
        with pytest.raises(PreconditionError):
            partition_holder_profile(logdist, 0.0, pairs)


class TestTailProbes:
    """Tests for the tail LDT probes."""

    def test_zero_function_has_no_tail(self, generic_measure, e1):
        """|u| ≥ A log n never happens for u ≡ 0."""
        report = tail_ldt_probe(generic_measure, u_zero(), e1, [16, 64], 500, 1.0, seed=3)
        assert report.bounded
        assert report.scaled_max == 0.0
        assert [row.n for row in report.rows] == [16, 64]

    def test_invalid_arguments(self, generic_measure, e1):
        """A ≤ 0 and n < 1 are precondition errors."""
        with pytest.raises(PreconditionError):
            tail_ldt_probe(generic_measure, u_zero(), e1, [16], 10, 0.0, seed=3)
        with pytest.raises(PreconditionError):
            tail_ldt_probe(generic_measure, u_zero(), e1, [0], 10, 1.0, seed=3)

    def test_tilted_tail_probe(self, generic_measure, e1):
        """The tilted tail check runs the tail property on tilted end points."""

        class NeutralTilt:
            def step_weights(self, states):
                return np.tile(generic_measure.probabilities, (states.shape[0], 1))

        report = tilted_tail_probe(
            generic_measure, u_zero(), e1, NeutralTilt(), 20, 10_000, [1.0], seed=2
        )
        assert report.samples == 10_000
        assert report.passed

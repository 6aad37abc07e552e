# ABOUTME: Reference constants for the limit-theorem suites: γ, ϱ², higher cumulants and ν̂
# ABOUTME: Taken from transfer operators when d = 2, from Monte Carlo estimates otherwise

import logging
from dataclasses import dataclass

import numpy as np

from cocyclelab.errors import DegenerateVarianceError, DimensionError
from cocyclelab.experiments.config import ExperimentConfig
from cocyclelab.randwalk import MeasureSpec, empirical_stationary, estimate_gamma_rho2
from cocyclelab.transfer import lambda_real_derivatives, spectral_at

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ReferenceValues:
    """
    Constants the statistics are centred and scaled with.

    Attributes:
        gammas: (γ₁, γ₂, …) with γ₁ = γ and γ₂ = ϱ²
        nu_points: Representatives describing ν̂
        nu_weights: Weights of nu_points, or None for plain samples
        source: "transfer" or "monte-carlo"
    """

    gammas: tuple[float, ...]
    nu_points: np.ndarray
    nu_weights: np.ndarray | None
    source: str

    @property
    def gamma(self) -> float:
        return self.gammas[0]

    @property
    def rho2(self) -> float:
        return self.gammas[1]


def reference_values(
    config: ExperimentConfig, mu: MeasureSpec, threads: int = 1, cumulants: int = 2
) -> ReferenceValues:
    """
    Compute γ, ϱ² (and up to γ₅) plus a description of ν̂.

    Values given in the config override the computed γ and ϱ².

    Raises:
        DimensionError: If cumulants beyond ϱ² are requested for d ≠ 2
        DegenerateVarianceError: If ϱ² is not positive
    """
    if mu.dimension == 2:
        grid = config.grid()
        derivatives = lambda_real_derivatives(
            mu, grid, order=max(cumulants, 2), h=config.spectrum.derivative_step
        )
        gammas = derivatives.gammas
        spectral = spectral_at(mu, 0.0, grid)
        nu_points, nu_weights = grid.points, np.asarray(spectral.nu_hat)
        source = "transfer"
    else:
        if cumulants > 2:
            raise DimensionError("Cumulants beyond rho2 need transfer operators (d = 2)")
        opts = config.estimate
        x0 = config.start_point()
        estimate = estimate_gamma_rho2(
            mu, x0, opts.horizon, config.trials, config.seed, threads=threads, burnin=opts.burnin
        )
        gammas = (estimate.gamma_hat, estimate.rho2_hat)
        nu = empirical_stationary(
            mu, x0, opts.stationary_burnin, opts.stationary_samples, config.seed
        )
        nu_points, nu_weights = nu.reps, None
        source = "monte-carlo"

    gamma = config.gamma if config.gamma is not None else gammas[0]
    rho2 = config.rho2 if config.rho2 is not None else gammas[1]
    if not rho2 > 0.0:
        raise DegenerateVarianceError(f"rho2 must be positive, got {rho2}")
    logger.info(f"Reference values from {source}: gamma={gamma:.8f}, rho2={rho2:.8f}")
    return ReferenceValues(
        gammas=(gamma, rho2, *gammas[2:]),
        nu_points=nu_points,
        nu_weights=nu_weights,
        source=source,
    )

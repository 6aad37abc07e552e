# ABOUTME: The spectrum command: perturbed transfer operators on the projective circle
# ABOUTME: Writes λ_{iξ}, Λ(s), the Cramér series and large-ξ decay, and checks them against walks

import logging
import math

import numpy as np

from cocyclelab.errors import DegenerateVarianceError, DimensionError
from cocyclelab.experiments.artifacts import ArtifactWriter
from cocyclelab.experiments.config import ExperimentConfig
from cocyclelab.experiments.ranges import parse_n_list
from cocyclelab.experiments.verdict import Criterion, at_least, at_most
from cocyclelab.randwalk import MeasureSpec, estimate_gamma_rho2
from cocyclelab.transfer import (
    CircleGrid,
    LambdaDerivatives,
    build_operator,
    cramer_zeta,
    lambda_curve,
    lambda_expansion_check,
    lambda_real_derivatives,
    large_xi_decay,
    leading_eigen,
    log_lambda,
    scgf_check,
    spectral_at,
)

logger = logging.getLogger(__name__)

LAMBDA0_TOLERANCE = 1e-8
EXPANSION_ORDER = 2.5

# λ_z may move by at most this much between the two refinement grids.
GRID_DRIFT_TOLERANCE = 1e-6
REFINE_ORDER = 3
# Imaginary twists iξ measured for drift, next to the real scgf values.
DRIFT_XI = (0.1, 0.2)

# estimate_gamma_rho2 refuses fewer trials.
MIN_MOMENT_TRIALS = 100


def run_spectrum(config: ExperimentConfig, writer: ArtifactWriter, threads: int) -> list[Criterion]:
    """
    Compute the spectral tables for a measure on 2×2 matrices.

    Returns:
        The consistency criteria, or none when spectrum.consistency is off

    Raises:
        DimensionError: If the measure is not two-dimensional
    """
    mu = config.build_measure()
    if mu.dimension != 2:
        raise DimensionError(f"spectrum needs d = 2, got d = {mu.dimension}")
    grid = config.grid()
    opts = config.spectrum
    logger.info(f"Transfer grid: m={grid.m}, order={grid.order}")

    with writer.timed("spectrum.gap"):
        unperturbed = leading_eigen(build_operator(mu, 0.0, grid), with_gap=True)
    writer.write_csv(
        "spectral_gap.csv",
        ["lambda", "gap", "residual", "deflation_residual", "iterations"],
        [
            (
                unperturbed.lambda_z.real,
                unperturbed.gap,
                unperturbed.residual,
                unperturbed.deflation_residual,
                unperturbed.iterations,
            )
        ],
    )

    with writer.timed("spectrum.curve"):
        xi = np.linspace(0.0, opts.xi_max, opts.xi_points)
        curve = lambda_curve(mu, grid, xi)
    writer.write_csv(
        "lambda_curve.csv",
        ["xi", "re", "im", "abs", "residual"],
        ((p.xi, p.lambda_z.real, p.lambda_z.imag, abs(p.lambda_z), p.residual) for p in curve),
    )

    with writer.timed("spectrum.lambda_real"):
        values = [(s, log_lambda(mu, grid, s)) for s in opts.s_values]
    writer.write_csv("lambda_real.csv", ["s", "Lambda"], values)

    with writer.timed("spectrum.derivatives"):
        derivatives = lambda_real_derivatives(
            mu, grid, order=opts.derivative_order, h=opts.derivative_step
        )
    writer.write_csv(
        "gammas.csv",
        ["m", "gamma", "error", "ill_conditioned"],
        (
            (m, g, e, ill)
            for m, (g, e, ill) in enumerate(
                zip(derivatives.gammas, derivatives.errors, derivatives.ill_conditioned), start=1
            )
        ),
    )

    zeta_rows = []
    try:
        zeta_rows = [(t, cramer_zeta(derivatives.gammas[1:], t)) for t in opts.zeta_t]
    except DegenerateVarianceError as e:
        logger.warning(f"Cramér series not available: {e}")
    writer.write_csv("zeta.csv", ["t", "zeta"], zeta_rows)

    with writer.timed("spectrum.decay"):
        horizons = parse_n_list(opts.decay_n_list)
        reports = [large_xi_decay(mu, grid, x, horizons) for x in opts.decay_xi]
    writer.write_csv(
        "decay.csv",
        ["xi", "n", "sup_norm", "rho_hat", "decay_fails"],
        (
            (report.xi, n, norm, report.rho_hat, report.decay_fails)
            for report in reports
            for n, norm in report.rows
        ),
    )
    if not opts.consistency:
        return []
    if len(derivatives.gammas) < 2:
        derivatives = lambda_real_derivatives(mu, grid, order=2, h=opts.derivative_step)
    return consistency_checks(config, mu, derivatives, unperturbed.lambda_z, writer, threads)


def consistency_checks(
    config: ExperimentConfig,
    mu: MeasureSpec,
    derivatives: LambdaDerivatives,
    lambda0: complex,
    writer: ArtifactWriter,
    threads: int,
) -> list[Criterion]:
    """
    Check the discretized spectrum against its own expansions and against Monte Carlo.

    Writes scgf.csv, expansion.csv, refinement.csv and moments.csv.

    Args:
        config: Experiment config
        mu: Step distribution on 2×2 matrices
        derivatives: Λ-derivatives at 0 with at least γ₁ and γ₂
        lambda0: Leading eigenvalue of the unperturbed operator
        writer: Artifact writer
        threads: Worker threads for the walks

    Returns:
        One criterion per check
    """
    opts = config.spectrum
    grid = config.grid()
    x0 = config.start_point()
    gamma, rho2 = derivatives.gammas[:2]
    criteria = [at_most("lambda0_unit", abs(lambda0 - 1.0), LAMBDA0_TOLERANCE)]

    with writer.timed("spectrum.scgf"):
        reports = [
            scgf_check(
                mu,
                x0,
                s,
                opts.scgf_n,
                config.trials,
                spectral_at(mu, s, grid),
                config.seed,
                threads=threads,
            )
            for s in opts.scgf_s
        ]
    writer.write_csv(
        "scgf.csv",
        ["s", "n", "monte_carlo", "transfer", "stderr", "tolerance"],
        ((r.s, r.n, r.monte_carlo, r.transfer, r.stderr, r.tolerance) for r in reports),
    )
    criteria.extend(
        at_most(f"scgf[s={r.s:g}]", abs(r.monte_carlo - r.transfer), r.tolerance) for r in reports
    )

    with writer.timed("spectrum.expansion"):
        expansion = lambda_expansion_check(mu, grid, opts.expansion_xi, gamma, rho2)
    writer.write_csv(
        "expansion.csv",
        ["xi", "re", "im", "residual"],
        ((xi, lam.real, lam.imag, residual) for xi, lam, residual in expansion.rows),
    )
    criteria.append(at_least("lambda_expansion_order", expansion.order, EXPANSION_ORDER))

    coarse, fine = (CircleGrid(m=m, order=REFINE_ORDER) for m in opts.refine_m)
    twists = [complex(s) for s in opts.scgf_s] + [1j * xi for xi in DRIFT_XI]
    refinement = []
    with writer.timed("spectrum.refinement"):
        for z in twists:
            lam_coarse = spectral_at(mu, z, coarse).lambda_z
            lam_fine = spectral_at(mu, z, fine).lambda_z
            refinement.append(
                (
                    z.real,
                    z.imag,
                    lam_coarse.real,
                    lam_coarse.imag,
                    lam_fine.real,
                    lam_fine.imag,
                    abs(lam_fine - lam_coarse),
                )
            )
    writer.write_csv(
        "refinement.csv",
        ["z_re", "z_im", "coarse_re", "coarse_im", "fine_re", "fine_im", "drift"],
        refinement,
    )
    drift = max(row[-1] for row in refinement)
    logger.info(f"Grid drift m={opts.refine_m[0]} -> m={opts.refine_m[1]}: {drift:.3e}")
    criteria.append(at_most("grid_drift", drift, GRID_DRIFT_TOLERANCE))

    if config.trials < MIN_MOMENT_TRIALS:
        reason = f"needs at least {MIN_MOMENT_TRIALS} trials"
        criteria.append(at_most("gamma_consistency", math.nan, math.nan, reason))
        criteria.append(at_most("rho2_consistency", math.nan, math.nan, reason))
        return criteria

    with writer.timed("spectrum.monte_carlo"):
        estimate = estimate_gamma_rho2(
            mu,
            x0,
            config.estimate.horizon,
            config.trials,
            config.seed,
            threads=threads,
            burnin=config.estimate.burnin,
        )
    moments = [
        ("gamma", gamma, derivatives.errors[0], estimate.gamma_hat, estimate.stderr_gamma),
        ("rho2", rho2, derivatives.errors[1], estimate.rho2_hat, estimate.stderr_rho2),
    ]
    writer.write_csv(
        "moments.csv", ["quantity", "transfer", "transfer_error", "monte_carlo", "stderr"], moments
    )
    reason = "degenerate variance" if estimate.degenerate else None
    for name, transfer_value, error, mc_value, stderr in moments:
        criteria.append(
            at_most(
                f"{name}_consistency",
                abs(transfer_value - mc_value),
                3.0 * math.hypot(error, stderr),
                reason,
            )
        )
    return criteria

# ABOUTME: The estimate command: Monte Carlo γ, ϱ², regularity exponent and LDT probes
# ABOUTME: Writes estimates.csv, ldt.csv and, on request, the per-trial walks.csv

import logging
import math

from cocyclelab.errors import InsufficientMassError
from cocyclelab.experiments.artifacts import ArtifactWriter
from cocyclelab.experiments.config import ExperimentConfig
from cocyclelab.experiments.ranges import parse_n_list
from cocyclelab.experiments.verdict import Criterion
from cocyclelab.randwalk import (
    MAX_ENUMERATED_WORDS,
    empirical_stationary,
    estimate_gamma_rho2,
    exact_ldt_probability,
    ldt_probe,
    proximality_gap,
    regularity_fit,
    run_walks,
)

logger = logging.getLogger(__name__)

ESTIMATE_HEADER = ["quantity", "value", "stderr", "horizon", "trials", "flag"]


def run_estimate(config: ExperimentConfig, writer: ArtifactWriter, threads: int) -> list[Criterion]:
    """
    Run the estimators and write their tables.

    Returns:
        No criteria; estimation has nothing to pass or fail
    """
    mu = config.build_measure()
    x0 = config.start_point()
    opts = config.estimate
    trials = config.trials

    with writer.timed("estimate.lyapunov"):
        lyapunov = estimate_gamma_rho2(
            mu, x0, opts.horizon, trials, config.seed, threads=threads, burnin=opts.burnin
        )

    with writer.timed("estimate.regularity"):
        nu = empirical_stationary(
            mu, x0, opts.stationary_burnin, opts.stationary_samples, config.seed
        )
        try:
            fit = regularity_fit(nu, config.dual_point(), opts.radii)
        except InsufficientMassError as e:
            logger.warning(f"Regularity fit skipped: {e}")
            fit = None

    with writer.timed("estimate.proximality"):
        proximality = proximality_gap(mu, opts.proximality_steps, config.seed)

    degenerate = "degenerate" if lyapunov.degenerate else ""
    rows = [
        ("gamma", lyapunov.gamma_hat, lyapunov.stderr_gamma, opts.horizon, trials, degenerate),
        ("rho2", lyapunov.rho2_hat, lyapunov.stderr_rho2, opts.horizon, trials, degenerate),
    ]
    if fit is not None:
        flag = "degenerate" if fit.degenerate or fit.r_squared < 0.9 else ""
        rows.append(("eta", fit.eta_hat, math.nan, None, len(nu), flag))
        rows.append(("eta_r_squared", fit.r_squared, math.nan, None, len(nu), flag))
    else:
        rows.append(("eta", math.nan, math.nan, None, len(nu), "insufficient_mass"))
    rows.append(
        (
            "proximality_log_gap",
            proximality.log_gap_full,
            math.nan,
            opts.proximality_steps,
            1,
            "" if proximality.growing else "not_growing",
        )
    )
    writer.write_csv("estimates.csv", ESTIMATE_HEADER, rows)

    with writer.timed("estimate.ldt"):
        horizons = parse_n_list(opts.ldt_n_list)
        report = ldt_probe(
            mu, x0, lyapunov.gamma_hat, opts.ldt_epsilon, horizons, trials, config.seed, threads
        )

    def exact(n: int) -> float:
        if mu.size**n > MAX_ENUMERATED_WORDS:
            return math.nan
        return exact_ldt_probability(mu, x0, lyapunov.gamma_hat, opts.ldt_epsilon, n)

    writer.write_csv(
        "ldt.csv",
        ["n", "epsilon", "hits", "trials", "p_hat", "p_lower", "p_upper", "p_exact"],
        (
            (r.n, opts.ldt_epsilon, r.hits, r.trials, r.p_hat, r.p_lower, r.p_upper, exact(r.n))
            for r in report.rows
        ),
    )
    if not report.decaying:
        logger.warning(f"LDT probabilities do not decay (slope={report.slope})")

    if opts.write_trials:
        with writer.timed("estimate.walks"):
            batch = run_walks(
                mu, x0, opts.horizon, trials, config.seed, threads=threads, burnin=opts.burnin
            )
        coords = [f"x_end_{i}" for i in range(mu.dimension)]
        writer.write_csv(
            "walks.csv",
            ["trial", "n", "sigma", *coords],
            (
                (i, batch.n, float(batch.sigma[i]), *(float(c) for c in batch.x_end[i]))
                for i in range(batch.trials)
            ),
        )
    return []

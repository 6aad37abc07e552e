# ABOUTME: Experiment driver for cocycle-lab: configs, artifacts, verdicts and the three commands
# ABOUTME: estimate, spectrum and verify each write hash-stamped CSV tables and a run manifest

from cocyclelab.experiments.artifacts import ArtifactWriter, format_cell
from cocyclelab.experiments.config import (
    ExperimentConfig,
    config_hash,
    load_config,
    parse_config,
)
from cocyclelab.experiments.estimate import run_estimate
from cocyclelab.experiments.ranges import parse_n_list
from cocyclelab.experiments.reference import ReferenceValues, reference_values
from cocyclelab.experiments.spectrum import run_spectrum
from cocyclelab.experiments.verdict import Criterion, Verdict, aggregate_exit_code
from cocyclelab.experiments.verify import SUITES, run_verify

__all__ = [
    "parse_n_list",
    "ExperimentConfig",
    "parse_config",
    "load_config",
    "config_hash",
    "ArtifactWriter",
    "format_cell",
    "Criterion",
    "Verdict",
    "aggregate_exit_code",
    "ReferenceValues",
    "reference_values",
    "run_estimate",
    "run_spectrum",
    "run_verify",
    "SUITES",
]

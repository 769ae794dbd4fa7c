"""Experiment engine and command line interface."""
from .config import ConfigError, ExperimentConfig
from .experiment import (
    ExperimentFailed,
    RejectionRow,
    RejectionTable,
    build_problem,
    run_experiment,
    run_identical_models,
    run_trial,
    wilson_interval,
)

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "ExperimentFailed",
    "RejectionRow",
    "RejectionTable",
    "build_problem",
    "run_experiment",
    "run_identical_models",
    "run_trial",
    "wilson_interval",
]

"""Relative kernel Stein discrepancy tests for latent variable models."""
from .estimators import KsdEstimate, VarianceEstimate, ksd_exact, ksd_latent, ksd_ustat, var_ustat, var_vstat
from .kernels import (
    Bandwidth,
    BoWGaussianKernel,
    ExpHammingKernel,
    GaussianKernel,
    median_heuristic,
)
from .reltest import TestConfig, TestReport, normal_quantile, relative_test, test_from_diff
from .stein import LatentBatch, NonFiniteScoreError, SteinGram, average_scores, diff_gram, stein_gram

__version__ = "0.1.0"

__all__ = [
    "Bandwidth",
    "GaussianKernel",
    "ExpHammingKernel",
    "BoWGaussianKernel",
    "median_heuristic",
    "LatentBatch",
    "SteinGram",
    "NonFiniteScoreError",
    "average_scores",
    "stein_gram",
    "diff_gram",
    "KsdEstimate",
    "VarianceEstimate",
    "ksd_ustat",
    "var_ustat",
    "var_vstat",
    "ksd_exact",
    "ksd_latent",
    "TestConfig",
    "TestReport",
    "normal_quantile",
    "relative_test",
    "test_from_diff",
]

"""One-sided relative goodness-of-fit test between two models.

H0: KSD_p(R) <= KSD_q(R), i.e. P fits at least as well as Q. The null is
rejected when the KSD difference exceeds ``sigma / sqrt(n) * z_{1-alpha}``.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import special

from .estimators import ksd_ustat, var_ustat, var_vstat
from .stein import SteinGram, diff_gram

__all__ = ["TestConfig", "TestReport", "normal_quantile", "relative_test", "DEGENERACY_RTOL"]

# sigma^2 below DEGENERACY_RTOL * mean|H|^2 * n counts as zero
DEGENERACY_RTOL = 1e-14


def normal_quantile(p: float) -> float:
    """Inverse of the standard normal CDF."""
    p = float(p)
    if not 0.0 < p < 1.0:
        raise ValueError(f"quantile level must lie in (0, 1), got {p}")
    return float(special.ndtri(p))


@dataclass(frozen=True)
class TestConfig:
    __test__ = False  # not a pytest class

    alpha: float = 0.05
    variance_method: str = "vstat"
    m: int = 500
    t: int = 200

    def __post_init__(self):
        if not 0.0 < self.alpha <= 0.5:
            raise ValueError(f"alpha must lie in (0, 0.5], got {self.alpha}")
        if self.variance_method not in ("ustat", "vstat"):
            raise ValueError(f"unknown variance method {self.variance_method!r}")


@dataclass(frozen=True)
class TestReport:
    __test__ = False

    u_diff: float
    sigma: float
    statistic: float | None
    threshold: float
    reject: bool
    degenerate: bool
    p_value: float
    n: int
    alpha: float
    variance_method: str
    sigma_sq: float

    def to_dict(self):
        return asdict(self)

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)


def relative_test(gram_p: SteinGram, gram_q: SteinGram, cfg: TestConfig | None = None) -> TestReport:
    cfg = cfg or TestConfig()
    return test_from_diff(diff_gram(gram_p, gram_q), cfg)


def test_from_diff(gram: SteinGram, cfg: TestConfig) -> TestReport:
    """Run the decision on an already-differenced Gram."""
    n = gram.n
    u = ksd_ustat(gram).u_stat
    if cfg.variance_method == "ustat":
        var = var_ustat(gram)
    else:
        var = var_vstat(gram)
    tau = normal_quantile(1.0 - cfg.alpha)
    scale = float(np.mean(np.abs(gram.h)))
    degenerate = var.sigma_sq <= DEGENERACY_RTOL * scale**2 * n
    if degenerate:
        return TestReport(u, 0.0, None, tau, False, True, 1.0, n, cfg.alpha,
                          cfg.variance_method, var.sigma_sq)
    sigma = math.sqrt(var.sigma_sq)
    reject = u > sigma / math.sqrt(n) * tau
    stat = math.sqrt(n) * u / sigma
    p_value = float(special.ndtr(-stat))
    return TestReport(u, sigma, stat, tau, bool(reject), False, p_value, n, cfg.alpha,
                      cfg.variance_method, var.sigma_sq)


test_from_diff.__test__ = False

"""U-statistic KSD estimate and asymptotic variance estimators.

Both variance estimators work from the Stein Gram ``H`` through its row sums,
so they cost O(n^2). The U-statistic estimator zeroes the diagonal first; the
V-statistic estimator uses the full matrix.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .stein import SteinGram, average_scores, stein_gram

__all__ = [
    "KsdEstimate",
    "VarianceEstimate",
    "ksd_ustat",
    "var_ustat",
    "var_vstat",
    "ksd_exact",
]


@dataclass(frozen=True)
class KsdEstimate:
    u_stat: float
    n: int


@dataclass(frozen=True)
class VarianceEstimate:
    """Estimate of the asymptotic variance of sqrt(n) * U.

    ``sigma_sq`` from the U-statistic method can be negative; ``degenerate``
    flags that case (and sigma_sq == 0) instead of clamping.
    """

    sigma_sq: float
    method: str
    components: dict = field(default_factory=dict)

    @property
    def degenerate(self) -> bool:
        return not self.sigma_sq > 0

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma_sq) if self.sigma_sq > 0 else 0.0


def _h(gram) -> np.ndarray:
    return gram.h if isinstance(gram, SteinGram) else np.asarray(gram, dtype=float)


def _offdiag(H):
    Hbar = np.array(H, dtype=float, copy=True)
    np.fill_diagonal(Hbar, 0.0)
    return Hbar


def ksd_ustat(gram) -> KsdEstimate:
    """Mean of the off-diagonal Gram entries."""
    H = _h(gram)
    n = H.shape[0]
    if n < 2:
        raise ValueError("the U-statistic needs n >= 2")
    rows = _offdiag(H).sum(axis=1)
    return KsdEstimate(math.fsum(rows) / (n * (n - 1)), n)


def var_ustat(gram) -> VarianceEstimate:
    """Unbiased estimate of n Var[U_n] from the off-diagonal Gram.

    ``A = (|Hbar 1|^2 - |Hbar|_F^2) / (n)_3``,
    ``B = ((1'Hbar 1)^2 - 4|Hbar 1|^2 + 2|Hbar|_F^2) / (n)_4``,
    ``C = |Hbar|_F^2 / (n)_2``, and
    ``sigma^2 = 4(n-2)/(n-1) (A - B) + 2/(n-1) (C - B)``.
    """
    H = _h(gram)
    n = H.shape[0]
    if n < 4:
        raise ValueError("the U-statistic variance estimator needs n >= 4")
    Hbar = _offdiag(H)
    rows = Hbar.sum(axis=1)
    row_sq = math.fsum(rows**2)
    total = math.fsum(rows)
    fro = math.fsum(np.einsum("ij,ij->i", Hbar, Hbar))
    A = (row_sq - fro) / (n * (n - 1) * (n - 2))
    B = (total**2 - 4.0 * row_sq + 2.0 * fro) / (n * (n - 1) * (n - 2) * (n - 3))
    C = fro / (n * (n - 1))
    sigma_sq = 4.0 * (n - 2) / (n - 1) * (A - B) + 2.0 / (n - 1) * (C - B)
    return VarianceEstimate(sigma_sq, "ustat", {"A": A, "B": B, "C": C})


def var_vstat(gram) -> VarianceEstimate:
    """V-statistic estimate ``4(n-2)/(n-1) (|H1|^2/n^3 - (1'H1)^2/n^4)``.

    The difference is evaluated as the centred sum of squares of the row sums,
    which is nonnegative by construction.
    """
    if isinstance(gram, SteinGram) and not gram.diag_valid:
        raise ValueError("the V-statistic variance needs the Gram diagonal")
    H = _h(gram)
    n = H.shape[0]
    if n < 2:
        raise ValueError("the V-statistic variance estimator needs n >= 2")
    rows = H.sum(axis=1)
    total = math.fsum(rows)
    A = math.fsum(rows**2) / n**3
    B = total**2 / n**4
    centred = rows - total / n
    spread = math.fsum(centred**2) / n**3
    sigma_sq = 4.0 * (n - 2) / (n - 1) * spread
    return VarianceEstimate(sigma_sq, "vstat", {"A": A, "B": B})


def ksd_exact(score_fn, X, kernel) -> KsdEstimate:
    """KSD U-statistic with a closed-form marginal score ``score_fn(X) -> (n, D)``."""
    X = np.asarray(X)
    if X.ndim == 1:
        X = X[:, None]
    S = np.asarray(score_fn(X), dtype=float)
    return ksd_ustat(stein_gram(S, X, kernel))


def ksd_latent(score_fn, X, latents, kernel) -> KsdEstimate:
    """KSD U-statistic with posterior-averaged conditional scores."""
    return ksd_ustat(stein_gram(average_scores(score_fn, X, latents), X, kernel))

"""Averaged conditional scores and Stein Gram matrices.

A latent variable model supplies a conditional score ``s_p(x | z)``. Given m
posterior draws per observation, each row of the score matrix is the mean of
the m conditional scores, and the Stein Gram is assembled once from those
averaged scores.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .kernels import BoWGaussianKernel, DiscreteKernel, GaussianKernel, Kernel, bow_counts, pairwise_sq_dists

__all__ = [
    "LatentBatch",
    "SteinGram",
    "NonFiniteScoreError",
    "average_scores",
    "stein_gram",
    "diff_gram",
]


class NonFiniteScoreError(ValueError):
    """A conditional score evaluated to NaN or Inf."""

    def __init__(self, i, j):
        super().__init__(f"non-finite conditional score at observation {i}, draw {j}")
        self.index = (i, j)


@dataclass
class LatentBatch:
    """Posterior draws for each observation.

    ``draws`` has shape (n, m, ...) where the trailing shape is the latent
    shape of the model. ``meta`` records the sampler name, seed and any
    diagnostics (e.g. acceptance rates).
    """

    draws: np.ndarray
    burn_in: int = 0
    sampler: str = ""
    seed: object = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.draws.ndim < 2 or self.draws.shape[1] < 1:
            raise ValueError("LatentBatch needs at least one draw per observation")

    @property
    def n(self):
        return self.draws.shape[0]

    @property
    def m(self):
        return self.draws.shape[1]


@dataclass
class SteinGram:
    """Symmetric n x n matrix of Stein kernel values."""

    h: np.ndarray
    diag_valid: bool = True

    @property
    def n(self):
        return self.h.shape[0]


def average_scores(score_fn, X, latents) -> np.ndarray:
    """Row i = mean over draws j of ``score_fn(X[i], latents.draws[i, j])``.

    ``score_fn`` may instead be a model object with a ``batch_cond_score``
    method taking (X, draws) and returning an (n, m, D) array, which is the
    path every model in :mod:`steincmp.models` uses.
    """
    draws = latents.draws if isinstance(latents, LatentBatch) else np.asarray(latents)
    X = np.asarray(X)
    if X.ndim == 1:
        X = X[:, None]
    n = X.shape[0]
    if draws.shape[0] != n:
        raise ValueError(f"{draws.shape[0]} latent batches for {n} observations")
    if hasattr(score_fn, "batch_cond_score"):
        vals = np.asarray(score_fn.batch_cond_score(X, draws), dtype=float)
    else:
        m = draws.shape[1]
        vals = np.empty((n, m, X.shape[1]))
        for i in range(n):
            for j in range(m):
                vals[i, j] = score_fn(X[i], draws[i, j])
    if vals.shape[2] != X.shape[1]:
        raise ValueError(f"score dimension {vals.shape[2]} != data dimension {X.shape[1]}")
    bad = ~np.isfinite(vals)
    if bad.any():
        i, j = np.argwhere(bad.any(axis=2))[0]
        raise NonFiniteScoreError(int(i), int(j))
    return vals.mean(axis=1)


def _mirror_upper(H):
    iu = np.triu_indices(H.shape[0], k=1)
    H[(iu[1], iu[0])] = H[iu]
    return H


def _gaussian_gram(S, X, kernel: GaussianKernel):
    n, D = X.shape
    c = kernel.c
    r2 = pairwise_sq_dists(X, X)
    k = np.exp(-0.5 * c * r2)
    # s_i . (x_i - x_j) and (x_i - x_j) . s_j
    sx_self = np.sum(S * X, axis=1)
    SX = S @ X.T  # (i, j) -> s_i . x_j
    t1 = sx_self[:, None] - SX  # s_i . (x_i - x_j)
    t2 = SX.T - sx_self[None, :]  # (x_i - x_j) . s_j
    H = k * (S @ S.T + c * t1 - c * t2 + c * (D - c * r2))
    return _mirror_upper(H)


def _generic_discrete_gram(S, X, kernel: DiscreteKernel):
    n, D = X.shape
    K = kernel.gram(X, X)
    H = K * (S @ S.T)
    for d in range(D):
        Xb = kernel.decrement(X, d)
        K_xb = kernel.gram(Xb, X)  # (i, j) -> k(xbar_i, x_j)
        K_both = kernel.gram(Xb, Xb)
        k1_ij = K - K_xb  # k1(x_i, x_j)_d
        k1_ji = k1_ij.T  # k1(x_j, x_i)_d
        H += S[:, d][:, None] * k1_ji + k1_ij * S[:, d][None, :]
        H += K - K_xb - K_xb.T + K_both
    return _mirror_upper(H)


def stein_gram(scores, X, kernel: Kernel) -> SteinGram:
    """Stein kernel Gram on the observations, diagonal included.

    Entry (i, j) is ``s_i.s_j k(x_i,x_j) + s_i.k1(x_j,x_i) + k1(x_i,x_j).s_j
    + tr k12(x_i,x_j)`` where k1 is the gradient (continuous) or backward
    difference (discrete) in the first argument.
    """
    S = np.asarray(scores, dtype=float)
    X = np.asarray(X)
    if X.ndim == 1:
        X = X[:, None]
    if S.ndim == 1:
        S = S[:, None]
    if S.shape != X.shape:
        raise ValueError(f"scores {S.shape} do not match data {X.shape}")
    if not np.all(np.isfinite(S)):
        raise NonFiniteScoreError(int(np.argwhere(~np.isfinite(S))[0, 0]), -1)
    if kernel.discrete:
        X = kernel.check_domain(X).astype(np.int64)
        if isinstance(kernel, BoWGaussianKernel):
            Bc = bow_counts(X, kernel.vocab_size)
            H = _backend.bow_stein_gram(
                np.ascontiguousarray(X), np.ascontiguousarray(Bc), np.ascontiguousarray(S)
            )
        else:
            H = _generic_discrete_gram(S, X, kernel)
    else:
        if np.issubdtype(X.dtype, np.integer):
            X = X.astype(float)
        H = _gaussian_gram(S, X.astype(float), kernel)
    return SteinGram(H, diag_valid=True)


def diff_gram(gram_p: SteinGram, gram_q: SteinGram) -> SteinGram:
    """Entrywise difference of two Grams computed on the same data ordering."""
    if gram_p.h.shape != gram_q.h.shape:
        raise ValueError(f"gram size mismatch: {gram_p.h.shape} vs {gram_q.h.shape}")
    return SteinGram(gram_p.h - gram_q.h, diag_valid=gram_p.diag_valid and gram_q.diag_valid)


def warn_if_kernels_differ(kernel_p, kernel_q):
    if repr(kernel_p) != repr(kernel_q):
        warnings.warn(
            f"comparing grams built with different kernels: {kernel_p!r} vs {kernel_q!r}",
            stacklevel=2,
        )

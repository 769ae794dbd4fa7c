"""Closed-form and brute-force reference computations.

Nothing here is on the testing hot path; these exist to cross-check the
estimators, samplers and problem constructions.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg
from scipy.special import gammaln, logsumexp

from .kernels import GaussianKernel
from .stein import SteinGram


@dataclass(frozen=True)
class GaussianSpec:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        cov = np.atleast_2d(np.asarray(self.cov, dtype=float))
        mean = np.zeros(cov.shape[0]) if self.mean is None else np.atleast_1d(np.asarray(self.mean, float))
        if cov.shape != (mean.shape[0], mean.shape[0]):
            raise ValueError("covariance shape does not match the mean")
        if np.max(np.abs(cov - cov.T), initial=0.0) > 1e-12:
            raise ValueError("covariance must be symmetric")
        try:
            np.linalg.cholesky(cov)
        except np.linalg.LinAlgError as e:
            raise ValueError("covariance must be positive definite") from e
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "mean", mean)

    @classmethod
    def centred(cls, cov):
        cov = np.atleast_2d(np.asarray(cov, dtype=float))
        return cls(np.zeros(cov.shape[0]), cov)

    @property
    def D(self):
        return self.cov.shape[0]


def logdet_pd(M) -> float:
    """log|M| via Cholesky; raises ValueError when M is not positive definite."""
    try:
        c = linalg.cholesky(np.atleast_2d(M), lower=True)
    except linalg.LinAlgError as e:
        raise ValueError("matrix is not positive definite") from e
    return 2.0 * float(np.sum(np.log(np.diag(c))))


def _spec(s) -> GaussianSpec:
    return s if isinstance(s, GaussianSpec) else GaussianSpec.centred(s)


def gaussian_mmd_sq_diff(p, q, r, lam) -> float:
    """MMD^2(p, r) - MMD^2(q, r) for zero-mean Gaussians.

    Kernel ``exp(-|x - x'|^2 / (2 lam^2))``. Each expectation is
    ``lam^D |S + lam^2 I|^{-1/2}`` for the covariance S of the difference
    of the two arguments.
    """
    p, q, r = _spec(p), _spec(q), _spec(r)
    for s in (p, q, r):
        if np.any(s.mean != 0):
            raise ValueError("only zero-mean Gaussians are supported")
    lam = float(lam)
    D = p.D
    I = np.eye(D)
    l2 = lam**2

    def term(S):
        return math.exp(D * math.log(lam) - 0.5 * logdet_pd(S + l2 * I))

    return (term(2 * p.cov) - term(2 * q.cov)) - 2.0 * (term(p.cov + r.cov) - term(q.cov + r.cov))


def mmd_sq_diff_mc(p, q, r, lam, n: int, seed=None):
    """Monte Carlo estimate of MMD^2(p, r) - MMD^2(q, r) with its standard error.

    Uses n independent draws of (x, x', y, y', w, w') with x, x' ~ p,
    y, y' ~ q and w, w' ~ r; the per-draw integrand is averaged.
    """
    p, q, r = _spec(p), _spec(q), _spec(r)
    rng = np.random.default_rng(seed)
    lam2 = float(lam) ** 2

    def draw(s):
        return rng.multivariate_normal(s.mean, s.cov, size=n)

    x1, x2, y1, y2, w1 = draw(p), draw(p), draw(q), draw(q), draw(r)

    def k(a, b):
        return np.exp(-np.sum((a - b) ** 2, axis=1) / (2 * lam2))

    f = k(x1, x2) - k(y1, y2) - 2.0 * (k(x1, w1) - k(y1, w1))
    return float(f.mean()), float(f.std(ddof=1) / math.sqrt(n))


def gaussian_ksd_sq(p, r, kernel, mc_n: int = 100_000, seed=None):
    """KSD^2 of N(0, Sigma_p) against N(0, Sigma_r) as ``<Delta^2, M>``.

    ``Delta = Sigma_p^{-1} - Sigma_r^{-1}`` and ``M = E[x1 x2' k(x1, x2)]`` with
    x1, x2 independent draws from r. M has no closed form, so the inner
    product is estimated by Monte Carlo over ``mc_n`` pairs. Returns
    (estimate, standard error).
    """
    p, r = _spec(p), _spec(r)
    delta = np.linalg.inv(p.cov) - np.linalg.inv(r.cov)
    if np.allclose(delta, 0.0, atol=0.0):
        return 0.0, 0.0
    rng = np.random.default_rng(seed)
    L = np.linalg.cholesky(r.cov)
    x1 = rng.standard_normal((mc_n, r.D)) @ L.T
    x2 = rng.standard_normal((mc_n, r.D)) @ L.T
    if isinstance(kernel, GaussianKernel):
        kv = np.exp(-0.5 * kernel.c * np.sum((x1 - x2) ** 2, axis=1))
    else:
        kv = np.array([kernel.eval(a, b) for a, b in zip(x1, x2)])
    d2 = delta @ delta
    f = np.einsum("ni,ij,nj->n", x1, d2, x2) * kv
    return float(f.mean()), float(f.std(ddof=1) / math.sqrt(mc_n))


def _h(gram):
    return gram.h if isinstance(gram, SteinGram) else np.asarray(gram, dtype=float)


def h_a(H, i, j, k):
    return (H[i, j] * H[i, k] + H[j, i] * H[j, k] + H[k, i] * H[k, j]) / 3.0


def h_b(H, i, j, k, l):
    return (H[i, j] * H[k, l] + H[i, k] * H[j, l] + H[i, l] * H[j, k]) / 3.0


def brute_var_components(gram, max_n: int = 12) -> dict:
    """Variance components by exhaustive index sums.

    U-statistic forms average ``h_a`` over all 3-subsets and ``h_b`` over all
    4-subsets of distinct indices, and ``h^2`` over ordered distinct pairs.
    V-statistic forms average ``h_a`` / ``h_b`` over all n^3 / n^4 index
    tuples, repeats included.
    """
    H = _h(gram)
    n = H.shape[0]
    if n > max_n:
        raise ValueError(f"exhaustive sums are limited to n <= {max_n}")
    if n < 4:
        raise ValueError("need n >= 4")
    idx = range(n)
    A = math.fsum(h_a(H, *c) for c in itertools.combinations(idx, 3)) / math.comb(n, 3)
    B = math.fsum(h_b(H, *c) for c in itertools.combinations(idx, 4)) / math.comb(n, 4)
    C = math.fsum(H[i, j] ** 2 for i, j in itertools.permutations(idx, 2)) / (n * (n - 1))
    AV = math.fsum(h_a(H, *c) for c in itertools.product(idx, repeat=3)) / n**3
    BV = math.fsum(h_b(H, *c) for c in itertools.product(idx, repeat=4)) / n**4
    return {"A": A, "B": B, "C": C, "AV": AV, "BV": BV}


def _assignments(K, D, max_states):
    if K**D > max_states:
        raise ValueError(f"{K}^{D} assignments exceeds the enumeration limit {max_states}")
    return np.array(list(itertools.product(range(K), repeat=D)), dtype=np.int64).reshape(-1, D)


def enumerate_lda_posterior(model, x, max_states: int = 4096):
    """Exact p(z | x) for one document by enumerating all K^D topic assignments.

    Returns (assignments, probabilities). The weight of z is the product of
    ``b[z_j, x_j]`` times the Dirichlet-multinomial prior of z.
    """
    x = np.asarray(x, dtype=np.int64)
    D = x.shape[0]
    K = model.K
    Z = _assignments(K, D, max_states)
    a = np.asarray(model.a, float)
    w = np.empty(len(Z))
    for s, z in enumerate(Z):
        lik = 1.0
        for j in range(D):
            lik *= model.b[z[j], x[j]]
        counts = np.bincount(z, minlength=K)
        prior = 1.0
        # rising factorials: prod_k a_k^(c_k) / (sum a)^(D)
        for k in range(K):
            for c in range(counts[k]):
                prior *= a[k] + c
        for c in range(D):
            prior /= a.sum() + c
        w[s] = lik * prior
    return Z, w / w.sum()


def enumerate_lda_posterior_log(model, x, max_states: int = 4096):
    """Log-space twin of :func:`enumerate_lda_posterior` (gamma functions, vectorised)."""
    x = np.asarray(x, dtype=np.int64)
    D = x.shape[0]
    K = model.K
    Z = _assignments(K, D, max_states)
    a = np.asarray(model.a, float)
    loglik = np.log(model.b)[Z, x[None, :]].sum(axis=1)
    counts = (Z[:, :, None] == np.arange(K)).sum(axis=1)
    logprior = (
        gammaln(a.sum()) - gammaln(a.sum() + D) + np.sum(gammaln(a + counts) - gammaln(a), axis=1)
    )
    lw = loglik + logprior
    return Z, np.exp(lw - logsumexp(lw))

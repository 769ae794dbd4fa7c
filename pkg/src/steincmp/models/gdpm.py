"""Gaussian Dirichlet process mixture.

x_i ~ N(z_i, phi^2 I), z_i ~ F, F ~ DP(a) with base measure a = N(mu, I)
(total mass one). Conditioned on training data the predictive mixes the base
measure with the training latents; the test-point latent is sampled with an
independence Metropolis step whose proposal is drawn from that mixture while
a Chinese-restaurant Gibbs chain updates the training latents.
"""
from __future__ import annotations

import numpy as np
from scipy.special import logsumexp

from ..stein import LatentBatch


class GdpmModel:
    family = "gdpm"

    def __init__(self, mu, phi_sq: float = 2.0, training_data=None):
        mu = np.atleast_1d(np.asarray(mu, dtype=float))
        if not phi_sq > 0:
            raise ValueError(f"phi_sq must be positive, got {phi_sq}")
        self.mu = mu
        self.mu.setflags(write=False)
        self.phi_sq = float(phi_sq)
        if training_data is not None:
            training_data = np.atleast_2d(np.asarray(training_data, dtype=float))
            if training_data.shape[1] != mu.shape[0]:
                raise ValueError("training data dimension does not match mu")
        self.training_data = training_data

    @property
    def D(self):
        return self.mu.shape[0]

    def __repr__(self):
        ntr = 0 if self.training_data is None else len(self.training_data)
        return f"GdpmModel(D={self.D}, phi_sq={self.phi_sq}, n_tr={ntr})"

    def to_dict(self):
        d = {"family": "gdpm", "mu": self.mu.tolist(), "phi_sq": self.phi_sq}
        if self.training_data is not None:
            d["training_data"] = self.training_data.tolist()
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(d["mu"], d.get("phi_sq", 2.0), d.get("training_data"))

    @classmethod
    def shifted(cls, delta: float, D: int, phi_sq: float = 2.0, training_data=None):
        """Model with prior mean ``delta * 1 / sqrt(D)``."""
        return cls(np.full(D, delta / np.sqrt(D)), phi_sq, training_data)

    def condition(self, training_data) -> "GdpmModel":
        return GdpmModel(self.mu, self.phi_sq, training_data)

    def cond_score(self, x, z):
        """-(x - z) / phi^2"""
        return -(np.asarray(x, float) - np.asarray(z, float)) / self.phi_sq

    def batch_cond_score(self, X, draws):
        return -(X[:, None, :] - draws) / self.phi_sq

    def marginal_sample(self, n: int, rng) -> np.ndarray:
        """Unconditioned marginal N(mu, (phi^2 + 1) I)."""
        rng = np.random.default_rng(rng)
        return self.mu + np.sqrt(self.phi_sq + 1.0) * rng.standard_normal((n, self.D))

    def base_posterior(self, X):
        """Mean and variance of z | x under the base measure alone (conjugate)."""
        X = np.asarray(X, float)
        mean = (X + self.phi_sq * self.mu) / (1.0 + self.phi_sq)
        return mean, self.phi_sq / (1.0 + self.phi_sq)


def _log_lik(x, z, phi_sq):
    # log N(x; z, phi^2 I) up to the shared constant
    return -0.5 * np.sum((x - z) ** 2, axis=-1) / phi_sq


def gdpm_mixture_weights(model: GdpmModel, x, training_latents):
    """(pi_a, pi_b) for the posterior of the latent of a test point ``x``.

    ``C_a = int psi(x|z) a(dz)`` and ``C_b`` the average of ``psi(x|z_i)``
    over the training latents; ``pi_a = C_a / (C_a + n C_b)``.
    """
    x = np.asarray(x, float)
    Zt = np.atleast_2d(training_latents)
    n = Zt.shape[0]
    D = model.D
    # log C_a: N(x; mu, (1 + phi^2) I); log C_b: mean of N(x; z_i, phi^2 I)
    log_ca = -0.5 * np.sum((x - model.mu) ** 2) / (1 + model.phi_sq) - 0.5 * D * np.log(
        2 * np.pi * (1 + model.phi_sq)
    )
    log_psi = _log_lik(x, Zt, model.phi_sq) - 0.5 * D * np.log(2 * np.pi * model.phi_sq)
    log_ncb = logsumexp(log_psi)
    pi_a = float(np.exp(log_ca - np.logaddexp(log_ca, log_ncb)))
    return pi_a, 1.0 - pi_a


def _crp_gibbs_step(labels, theta, Xtr, mu, phi_sq, rng):
    """One random-scan update of a training label, then refresh all cluster values.

    labels: (c, n_tr) slot indices; theta: (c, n_tr, D) slot values. Each of the
    c chains is updated independently.
    """
    c, n_tr = labels.shape
    D = Xtr.shape[1]
    rows = np.arange(c)
    r = rng.integers(0, n_tr, size=c)
    onehot = labels[:, :, None] == np.arange(n_tr)[None, None, :]  # (c, item, slot)
    counts = onehot.sum(axis=1)
    counts[rows, labels[rows, r]] -= 1
    xr = Xtr[r]  # (c, D)
    log_w = np.where(
        counts > 0,
        np.log(np.maximum(counts, 1)) + _log_lik(xr[:, None, :], theta, phi_sq),
        -np.inf,
    )
    # new table: alpha * N(x_r; mu, (1 + phi^2) I) relative to N(x_r; z, phi^2 I)
    log_new = (
        -0.5 * np.sum((xr - mu) ** 2, axis=1) / (1 + phi_sq)
        - 0.5 * D * np.log((1 + phi_sq) / phi_sq)
    )
    all_w = np.concatenate([log_w, log_new[:, None]], axis=1)
    all_w -= all_w.max(axis=1, keepdims=True)
    p = np.exp(all_w)
    cp = np.cumsum(p, axis=1)
    u = rng.random(c) * cp[:, -1]
    choice = np.minimum((cp <= u[:, None]).sum(axis=1), n_tr)
    is_new = choice == n_tr
    # first empty slot for a new table
    empty = counts == 0
    first_empty = np.argmax(empty, axis=1)
    slot = np.where(is_new, first_empty, choice)
    labels[rows, r] = slot
    # refresh every occupied cluster value from its conjugate posterior
    onehot = labels[:, :, None] == np.arange(n_tr)[None, None, :]
    size = onehot.sum(axis=1).astype(float)  # (c, slot)
    sums = np.einsum("cis,id->csd", onehot.astype(float), Xtr)
    prec = 1.0 + size / phi_sq
    mean = (mu[None, None, :] + sums / phi_sq) / prec[:, :, None]
    draw = mean + rng.standard_normal(theta.shape) / np.sqrt(prec)[:, :, None]
    theta[:] = np.where(size[:, :, None] > 0, draw, theta)
    return labels, theta


def gdpm_posterior_sampler(model: GdpmModel, X, m: int, t: int, seed=None) -> LatentBatch:
    """Latent draws for each test point under the training-conditioned predictive.

    One chain per test point. Each iteration makes one Chinese-restaurant
    Gibbs update of the training latents, then proposes ``z'`` from the current
    predictive mixture (the base measure with weight 1/(n_tr+1), otherwise a
    uniformly chosen training latent) and accepts with probability
    ``min(1, psi(x|z') / psi(x|z))``. Without training data the proposal is
    the base measure and the chain targets the conjugate posterior.
    """
    if model.training_data is None:
        raise ValueError("the GDPM posterior sampler needs training data (may be empty)")
    rng = np.random.default_rng(seed)
    X = np.atleast_2d(np.asarray(X, float))
    n, D = X.shape
    Xtr = np.asarray(model.training_data, float).reshape(-1, D)
    n_tr = Xtr.shape[0]
    mu = np.asarray(model.mu)
    phi_sq = model.phi_sq
    # start the test latents at the base-measure posterior
    bmean, bvar = model.base_posterior(X)
    z = bmean + np.sqrt(bvar) * rng.standard_normal((n, D))
    if n_tr:
        labels = np.tile(np.arange(n_tr), (n, 1))
        tmean, tvar = model.base_posterior(Xtr)
        theta = tmean[None] + np.sqrt(tvar) * rng.standard_normal((n, n_tr, D))
    draws = np.empty((n, m, D))
    accepted = np.zeros(n)
    rows = np.arange(n)
    p_base = 1.0 / (n_tr + 1.0)
    for it in range(t + m):
        if n_tr:
            labels, theta = _crp_gibbs_step(labels, theta, Xtr, mu, phi_sq, rng)
            latents = theta[rows[:, None], labels]  # (n, n_tr, D)
            pick = rng.integers(0, n_tr, size=n)
            from_base = rng.random(n) < p_base
            base_draw = mu + rng.standard_normal((n, D))
            zp = np.where(from_base[:, None], base_draw, latents[rows, pick])
        else:
            zp = mu + rng.standard_normal((n, D))
        log_ratio = _log_lik(X, zp, phi_sq) - _log_lik(X, z, phi_sq)
        acc = np.log(rng.random(n)) < np.minimum(log_ratio, 0.0)
        z = np.where(acc[:, None], zp, z)
        if it >= t:
            draws[:, it - t] = z
            accepted += acc
    meta = {"acceptance_rate": accepted / m}
    return LatentBatch(draws, burn_in=t, sampler="gdpm-gibbs-metropolis", seed=seed, meta=meta)

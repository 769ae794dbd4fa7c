"""Probabilistic PCA: x | z ~ N(Az, psi^2 I), z ~ N(0, I)."""
from __future__ import annotations

import numpy as np
from scipy import linalg

from ..stein import LatentBatch


class PpcaModel:
    """PPCA with weights ``A`` (D x Dz) and noise standard deviation ``psi``."""

    family = "ppca"

    def __init__(self, A, psi: float = 1.0):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        if A.ndim != 2:
            raise ValueError("A must be a D x Dz matrix")
        psi = float(psi)
        if not psi > 0:
            raise ValueError(f"psi must be positive, got {psi}")
        self.A = A
        self.A.setflags(write=False)
        self.psi = psi
        self._marg_cho = None
        self._post = None

    @property
    def D(self):
        return self.A.shape[0]

    @property
    def Dz(self):
        return self.A.shape[1]

    def __repr__(self):
        return f"PpcaModel(D={self.D}, Dz={self.Dz}, psi={self.psi})"

    def to_dict(self):
        return {"family": "ppca", "A": self.A.tolist(), "psi": self.psi}

    @classmethod
    def from_dict(cls, d):
        return cls(np.asarray(d["A"], dtype=float), d.get("psi", 1.0))

    @property
    def marginal_cov(self):
        return self.A @ self.A.T + self.psi**2 * np.eye(self.D)

    def sample(self, n: int, rng) -> np.ndarray:
        """n draws of x = Az + psi * eps."""
        rng = np.random.default_rng(rng)
        z = rng.standard_normal((n, self.Dz))
        eps = rng.standard_normal((n, self.D))
        return z @ self.A.T + self.psi * eps

    def cond_score(self, x, z):
        """-(x - Az) / psi^2"""
        x = np.asarray(x, dtype=float)
        z = np.asarray(z, dtype=float)
        return -(x - self.A @ z) / self.psi**2

    def batch_cond_score(self, X, draws):
        # X: (n, D), draws: (n, m, Dz)
        return -(X[:, None, :] - draws @ self.A.T) / self.psi**2

    def marginal_score(self, X):
        """-(AA' + psi^2 I)^{-1} x, row-wise for a batch."""
        if self._marg_cho is None:
            self._marg_cho = linalg.cho_factor(self.marginal_cov, lower=True)
        X = np.asarray(X, dtype=float)
        return -linalg.cho_solve(self._marg_cho, X.T).T if X.ndim == 2 else -linalg.cho_solve(self._marg_cho, X)

    def _posterior_factors(self):
        # posterior precision M = I + A'A / psi^2
        if self._post is None:
            M = np.eye(self.Dz) + self.A.T @ self.A / self.psi**2
            L = np.linalg.cholesky(M)
            self._post = (M, L)
        return self._post

    def posterior_mean(self, X):
        M, L = self._posterior_factors()
        X = np.atleast_2d(X)
        rhs = X @ self.A / self.psi**2
        return linalg.cho_solve((L, True), rhs.T).T

    def posterior_cov(self):
        M, _ = self._posterior_factors()
        return np.linalg.inv(M)

    def perturb(self, delta: float) -> "PpcaModel":
        """Copy with ``delta`` added to A[0, 0]."""
        A = np.array(self.A, copy=True)
        A[0, 0] += delta
        return PpcaModel(A, self.psi)

    def log_joint_grad(self, X, Z):
        """Gradient in z of log p(x|z) + log p(z), batched over leading dims."""
        resid = X - Z @ self.A.T
        return resid @ self.A / self.psi**2 - Z


def ppca_posterior_exact(model: PpcaModel, X, m: int, seed=None) -> LatentBatch:
    """m i.i.d. posterior draws N(M^{-1} A'x / psi^2, M^{-1}) per observation."""
    rng = np.random.default_rng(seed)
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n = X.shape[0]
    M, L = model._posterior_factors()
    mean = model.posterior_mean(X)
    eps = rng.standard_normal((n, m, model.Dz))
    # z = mean + L^{-T} eps has covariance (L L')^{-1} = M^{-1}
    noise = linalg.solve_triangular(L, eps.reshape(-1, model.Dz).T, lower=True, trans="T").T
    draws = mean[:, None, :] + noise.reshape(n, m, model.Dz)
    return LatentBatch(draws, burn_in=0, sampler="ppca-exact", seed=seed)


def ppca_posterior_mcmc(
    model: PpcaModel,
    X,
    m: int,
    t: int,
    step_size: float | None = None,
    target_accept: float = 0.574,
    adapt: bool = True,
    thin: int = 1,
    init=None,
    precondition: bool = True,
    seed=None,
) -> LatentBatch:
    """Metropolis-adjusted Langevin chains, one per observation, run in lockstep.

    The log step size of each chain is adapted towards ``target_accept``
    during the ``t`` burn-in transitions and frozen afterwards; the next
    ``m * thin`` transitions are kept (every ``thin``-th).

    With ``precondition`` the drift and noise use the inverse of the negative
    Hessian of the log joint (a constant for this model) as mass matrix.
    """
    if t < 0 or m < 1 or thin < 1:
        raise ValueError("need t >= 0, m >= 1 and thin >= 1")
    rng = np.random.default_rng(seed)
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n = X.shape[0]
    psi2 = model.psi**2
    A = model.A

    def logp(Z):
        r = X - Z @ A.T
        return -0.5 * np.sum(r * r, axis=1) / psi2 - 0.5 * np.sum(Z * Z, axis=1)

    Dz = model.Dz
    if precondition:
        M, L = model._posterior_factors()
    else:
        M, L = np.eye(Dz), np.eye(Dz)

    def precond(G):
        return linalg.cho_solve((L, True), G.T).T

    def noise(E):
        # covariance M^{-1}: solve L' y = e
        return linalg.solve_triangular(L, E.T, lower=True, trans="T").T

    def mnorm(V):
        W = V @ L
        return np.sum(W * W, axis=1)

    if step_size is None:
        if precondition:
            step_size = 1.0
        else:
            # curvature scale of the posterior: largest eigenvalue of its precision
            step_size = 1.0 / (1.0 + np.linalg.norm(A, 2) ** 2 / psi2)
    h = np.full(n, float(step_size))
    Z = np.zeros((n, Dz)) if init is None else np.array(np.broadcast_to(init, (n, model.Dz)), dtype=float)
    lp = logp(Z)
    g = model.log_joint_grad(X, Z)
    if not np.all(np.isfinite(lp)):
        raise FloatingPointError("non-finite log density at the initial state")

    draws = np.empty((n, m, model.Dz))
    accepted = np.zeros(n)
    n_kept_steps = 0
    total = t + m * thin
    for it in range(total):
        sd = np.sqrt(h)[:, None]
        mean_fwd = Z + 0.5 * h[:, None] * precond(g)
        Zp = mean_fwd + sd * noise(rng.standard_normal(Z.shape))
        lpp = logp(Zp)
        gp = model.log_joint_grad(X, Zp)
        mean_bwd = Zp + 0.5 * h[:, None] * precond(gp)
        log_q_fwd = -mnorm(Zp - mean_fwd) / (2 * h)
        log_q_bwd = -mnorm(Z - mean_bwd) / (2 * h)
        log_ratio = lpp - lp + log_q_bwd - log_q_fwd
        if not np.all(np.isfinite(lpp)):
            raise FloatingPointError(f"non-finite log density at transition {it}")
        acc_prob = np.exp(np.minimum(log_ratio, 0.0))
        acc = rng.random(n) < acc_prob
        Z = np.where(acc[:, None], Zp, Z)
        lp = np.where(acc, lpp, lp)
        g = np.where(acc[:, None], gp, g)
        if it < t:
            if adapt:
                gamma = 1.0 / np.sqrt(it + 10.0)
                h = h * np.exp(gamma * (acc_prob - target_accept))
        else:
            accepted += acc
            n_kept_steps += 1
            k = it - t
            if (k + 1) % thin == 0:
                draws[:, k // thin] = Z
    meta = {
        "acceptance_rate": accepted / max(n_kept_steps, 1),
        "step_size": h,
    }
    return LatentBatch(draws, burn_in=t, sampler="ppca-mala", seed=seed, meta=meta)

"""Positive definite kernels with the derivative/difference pieces used by
Stein kernels.

Continuous kernels expose ``grad1`` (gradient in the first argument) and
``trace12`` (trace of the mixed second derivative). Discrete kernels on
``{0, ..., L-1}^D`` expose the cyclic backward difference ``diff_back_1`` and
its two-sided analogue ``trace12_discrete``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

__all__ = [
    "Bandwidth",
    "Kernel",
    "GaussianKernel",
    "DiscreteKernel",
    "ExpHammingKernel",
    "BoWGaussianKernel",
    "median_heuristic",
    "pairwise_sq_dists",
    "bow_counts",
]


@dataclass(frozen=True)
class Bandwidth:
    """Length-scale of a Gaussian kernel."""

    value: float

    def __post_init__(self):
        v = float(self.value)
        if not np.isfinite(v) or v <= 0:
            raise ValueError(f"bandwidth must be positive and finite, got {self.value!r}")
        object.__setattr__(self, "value", v)

    def __float__(self):
        return self.value


def _as_bandwidth(lam) -> Bandwidth:
    return lam if isinstance(lam, Bandwidth) else Bandwidth(lam)


def pairwise_sq_dists(X, Y):
    """Squared Euclidean distances between rows of X (n x d) and Y (m x d)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    return cdist(X, Y, "sqeuclidean")


def bow_counts(X, vocab_size: int):
    """Bag-of-words counts: row i, column l = occurrences of word l in X[i]."""
    X = np.atleast_2d(np.asarray(X))
    n = X.shape[0]
    B = np.zeros((n, vocab_size), dtype=np.int64)
    rows = np.repeat(np.arange(n), X.shape[1])
    np.add.at(B, (rows, X.ravel()), 1)
    return B


def _check_pair(x, y):
    x = np.asarray(x)
    y = np.asarray(y)
    if x.ndim != 1 or y.ndim != 1:
        raise ValueError("points must be one-dimensional arrays")
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape[0]} vs {y.shape[0]}")
    return x, y


class Kernel:
    """Base class. Subclasses implement the vectorised ``gram``."""

    discrete = False

    def gram(self, X, Y):
        raise NotImplementedError

    def eval(self, x, y) -> float:
        x, y = _check_pair(x, y)
        return float(self.gram(x[None, :], y[None, :])[0, 0])


class GaussianKernel(Kernel):
    """Gaussian kernel in one of two bandwidth conventions.

    ``convention="sq"`` gives ``exp(-|x-y|^2 / lam^2)`` and ``"half"`` gives
    ``exp(-|x-y|^2 / (2 lam^2))``. Internally both are ``exp(-c r^2 / 2)``
    with ``c = 2/lam^2`` or ``1/lam^2``.
    """

    def __init__(self, bandwidth, convention: str = "sq"):
        if convention not in ("sq", "half"):
            raise ValueError(f"unknown Gaussian convention {convention!r}")
        self.bandwidth = _as_bandwidth(bandwidth)
        self.convention = convention
        lam2 = self.bandwidth.value**2
        self.c = 2.0 / lam2 if convention == "sq" else 1.0 / lam2

    def __repr__(self):
        return f"GaussianKernel(bandwidth={self.bandwidth.value!r}, convention={self.convention!r})"

    def gram(self, X, Y):
        return np.exp(-0.5 * self.c * pairwise_sq_dists(X, Y))

    def grad1(self, x, y):
        x, y = _check_pair(np.asarray(x, float), np.asarray(y, float))
        diff = x - y
        k = np.exp(-0.5 * self.c * diff @ diff)
        return -self.c * diff * k

    def trace12(self, x, y) -> float:
        x, y = _check_pair(np.asarray(x, float), np.asarray(y, float))
        diff = x - y
        r2 = diff @ diff
        k = np.exp(-0.5 * self.c * r2)
        return float(self.c * k * (x.shape[0] - self.c * r2))

    def diff_back_1(self, x, y):
        raise TypeError("diff_back_1 needs a discrete kernel")

    def trace12_discrete(self, x, y):
        raise TypeError("trace12_discrete needs a discrete kernel")


class DiscreteKernel(Kernel):
    """Kernel on ``{0, ..., L-1}^D`` with cyclic difference operators."""

    discrete = True

    def __init__(self, vocab_size: int):
        L = int(vocab_size)
        if L < 2:
            raise ValueError(f"vocab_size must be > 1, got {vocab_size!r}")
        self.vocab_size = L

    def check_domain(self, X):
        X = np.asarray(X)
        if not np.issubdtype(X.dtype, np.integer):
            if not np.all(np.equal(np.mod(X, 1), 0)):
                raise ValueError("discrete data must be integer valued")
            X = X.astype(np.int64)
        if X.size and (X.min() < 0 or X.max() >= self.vocab_size):
            raise ValueError(f"symbols must lie in [0, {self.vocab_size - 1}]")
        return X

    def decrement(self, x, d):
        xb = np.array(x, copy=True)
        xb[..., d] = (xb[..., d] - 1) % self.vocab_size
        return xb

    def diff_back_1(self, x, y):
        """Backward difference of k in its first argument, one entry per coordinate."""
        x, y = _check_pair(self.check_domain(x), self.check_domain(y))
        k = self.eval(x, y)
        return np.array([k - self.eval(self.decrement(x, d), y) for d in range(x.shape[0])])

    def trace12_discrete(self, x, y) -> float:
        x, y = _check_pair(self.check_domain(x), self.check_domain(y))
        total = 0.0
        k = self.eval(x, y)
        for d in range(x.shape[0]):
            xb = self.decrement(x, d)
            yb = self.decrement(y, d)
            total += k - self.eval(xb, y) - self.eval(x, yb) + self.eval(xb, yb)
        return total

    def grad1(self, x, y):
        raise TypeError("grad1 needs a continuous kernel")

    def trace12(self, x, y):
        raise TypeError("trace12 needs a continuous kernel")


class ExpHammingKernel(DiscreteKernel):
    """``exp(-d_H(x, y))`` with ``d_H`` the fraction of differing coordinates."""

    def __repr__(self):
        return f"ExpHammingKernel(vocab_size={self.vocab_size})"

    def gram(self, X, Y):
        X = np.atleast_2d(self.check_domain(X))
        Y = np.atleast_2d(self.check_domain(Y))
        if X.shape[1] != Y.shape[1]:
            raise ValueError("dimension mismatch")
        ham = (X[:, None, :] != Y[None, :, :]).mean(axis=2)
        return np.exp(-ham)


class BoWGaussianKernel(DiscreteKernel):
    """Gaussian kernel on bag-of-words counts, ``exp(-|B(x)-B(y)|^2 / (2D))``.

    The divisor is fixed to twice the document length; there is no bandwidth.
    """

    def __repr__(self):
        return f"BoWGaussianKernel(vocab_size={self.vocab_size})"

    def gram(self, X, Y):
        X = np.atleast_2d(self.check_domain(X))
        Y = np.atleast_2d(self.check_domain(Y))
        if X.shape[1] != Y.shape[1]:
            raise ValueError("dimension mismatch")
        D = X.shape[1]
        BX = bow_counts(X, self.vocab_size)
        BY = bow_counts(Y, self.vocab_size)
        return np.exp(-pairwise_sq_dists(BX, BY) / (2.0 * D))


def median_heuristic(X, vocab_size: int | None = None) -> Bandwidth:
    """Median of all n(n-1)/2 pairwise Euclidean distances.

    With ``vocab_size`` the rows are treated as documents and the distances
    are taken between their bag-of-words counts.
    """
    X = np.asarray(X)
    if X.ndim == 1:
        X = X[:, None]
    n = X.shape[0]
    if n < 2:
        raise ValueError("median heuristic needs at least two points")
    Z = bow_counts(X, vocab_size) if vocab_size is not None else X.astype(float)
    iu = np.triu_indices(n, k=1)
    med = float(np.median(np.sqrt(pairwise_sq_dists(Z, Z)[iu])))
    if med <= 0:
        raise ValueError("median pairwise distance is zero; all points identical?")
    return Bandwidth(med)

import numpy as np
import pytest
from scipy import integrate, stats

from steincmp.models import GdpmModel, gdpm_mixture_weights, gdpm_posterior_sampler, model_from_dict


def test_validation():
    with pytest.raises(ValueError):
        GdpmModel(np.zeros(2), 0.0)
    with pytest.raises(ValueError):
        GdpmModel(np.zeros(2), 2.0, np.zeros((3, 3)))
    with pytest.raises(ValueError):
        gdpm_posterior_sampler(GdpmModel(np.zeros(2)), np.zeros((1, 2)), 5, 5)


def test_cond_score_and_shift():
    model = GdpmModel.shifted(1.5, 4, 2.0)
    assert model.mu == pytest.approx(np.full(4, 0.75))
    assert model.cond_score(np.ones(4), np.zeros(4)) == pytest.approx(np.full(4, -0.5))


def test_marginal_ks():
    model = GdpmModel([0.3], 2.0)
    x = model.marginal_sample(10_000, np.random.default_rng(0))[:, 0]
    ks = stats.kstest(x, stats.norm(0.3, np.sqrt(3.0)).cdf).statistic
    assert ks < 0.01


def test_empty_training_set_is_conjugate():
    model = GdpmModel(np.array([0.5, -1.0]), 2.0, np.empty((0, 2)))
    X = np.array([[1.0, 2.0], [-3.0, 0.0]])
    lat = gdpm_posterior_sampler(model, X, m=20_000, t=200, seed=1)
    mean, var = model.base_posterior(X)
    for i in range(2):
        Z = lat.draws[i]
        # independence sampler chains are autocorrelated; allow for it with batch means
        bm = Z.reshape(100, -1, 2).mean(axis=1)
        se = bm.std(axis=0, ddof=1) / 10
        assert np.all(np.abs(Z.mean(axis=0) - mean[i]) < 4 * se)
        assert np.allclose(Z.var(axis=0), var, rtol=0.05)


def test_one_training_point_matches_quadrature():
    mu, phi_sq = 0.0, 2.0
    x_tr, x = 2.5, 1.0
    model = GdpmModel([mu], phi_sq, np.array([[x_tr]]))
    lat = gdpm_posterior_sampler(model, np.full((2000, 1), x), m=50, t=50, seed=2)
    draws = lat.draws.ravel()
    # predictive: base measure and the training latent's posterior, weight 1/2 each
    m_tr = (x_tr + phi_sq * mu) / (1 + phi_sq)
    v_tr = phi_sq / (1 + phi_sq)

    def dens(z):
        pred = 0.5 * stats.norm.pdf(z, mu, 1.0) + 0.5 * stats.norm.pdf(z, m_tr, np.sqrt(v_tr))
        return stats.norm.pdf(x, z, np.sqrt(phi_sq)) * pred

    edges = np.linspace(-4, 6, 41)
    norm = integrate.quad(dens, -np.inf, np.inf)[0]
    ref = np.array([integrate.quad(dens, lo, hi)[0] for lo, hi in zip(edges[:-1], edges[1:])]) / norm
    ref = np.append(ref, 1 - ref.sum())
    hist = np.histogram(draws, edges)[0] / draws.size
    hist = np.append(hist, 1 - hist.sum())
    assert 0.5 * np.abs(hist - ref).sum() <= 0.05


def test_mixture_weights():
    model = GdpmModel([0.0], 2.0)
    pa, pb = gdpm_mixture_weights(model, np.array([0.0]), np.array([[0.0]]))
    ca = stats.norm.pdf(0, 0, np.sqrt(3))
    cb = stats.norm.pdf(0, 0, np.sqrt(2))
    assert pa == pytest.approx(ca / (ca + cb)) and pa + pb == pytest.approx(1.0)


def test_sampler_with_several_training_points_runs():
    R = GdpmModel(np.zeros(3), 2.0)
    train = R.marginal_sample(5, np.random.default_rng(0))
    P = GdpmModel.shifted(0.5, 3, 2.0, train)
    X = R.marginal_sample(4, np.random.default_rng(1))
    a = gdpm_posterior_sampler(P, X, 30, 30, seed=3)
    b = gdpm_posterior_sampler(P, X, 30, 30, seed=3)
    assert a.draws.shape == (4, 30, 3) and np.array_equal(a.draws, b.draws)
    assert np.all(a.meta["acceptance_rate"] > 0)
    Q = model_from_dict(P.to_dict())
    assert np.array_equal(Q.training_data, P.training_data)

import numpy as np
import pytest

from steincmp.models import LdaModel, lda_collapsed_gibbs, model_from_dict
from steincmp.oracles import enumerate_lda_posterior


def tiny(a=(0.4, 0.9), b=((0.7, 0.3), (0.2, 0.8))):
    return LdaModel(np.array(a), np.array(b))


def test_validation():
    with pytest.raises(ValueError):
        LdaModel([1.0, 1.0], [[0.5, 0.5]])
    with pytest.raises(ValueError):
        LdaModel([1.0], [[0.6, 0.5]])
    with pytest.raises(ValueError):
        LdaModel([0.0], [[0.5, 0.5]])
    with pytest.raises(ValueError):
        lda_collapsed_gibbs(tiny(), np.array([[0, 2]]), 5, 5)


def test_sample_word_frequencies():
    model = LdaModel([0.5, 0.5, 0.5], np.random.default_rng(0).dirichlet(np.ones(6), size=3))
    X = model.sample(20_000, 10, np.random.default_rng(1))
    assert X.shape == (20_000, 10) and X.min() >= 0 and X.max() < 6
    # marginal word distribution is the prior-mean topic mix of b
    expected = (model.a / model.a.sum()) @ model.b
    freq = np.bincount(X.ravel(), minlength=6) / X.size
    assert np.allclose(freq, expected, atol=0.01)


def test_cond_score_examples():
    model = tiny()
    # topic 0 word 0 -> b[0,1]/b[0,0] - 1; topic 1 word 1 wraps to word 0
    s = model.cond_score(np.array([0, 1]), np.array([0, 1]))
    assert s == pytest.approx([0.3 / 0.7 - 1, 0.2 / 0.8 - 1])
    assert np.all(model.ratio >= -1)


def test_enumeration_two_implementations_agree():
    from steincmp.oracles import enumerate_lda_posterior_log
    model = LdaModel([0.3, 0.5, 1.2], np.random.default_rng(3).dirichlet(np.ones(4), size=3))
    x = np.array([0, 3, 1, 1, 2])
    Z1, p1 = enumerate_lda_posterior(model, x)
    Z2, p2 = enumerate_lda_posterior_log(model, x)
    assert np.array_equal(Z1, Z2)
    assert np.allclose(p1, p2, rtol=1e-12, atol=0)


def _empirical(draws, K):
    D = draws.shape[-1]
    codes = (draws.reshape(-1, D) * K ** np.arange(D - 1, -1, -1)).sum(axis=1)
    return np.bincount(codes, minlength=K**D) / len(codes)


@pytest.mark.parametrize("x", [[0, 0], [0, 1], [1, 1]])
def test_gibbs_matches_enumerated_posterior(x):
    model = tiny()
    X = np.tile(np.array(x), (1000, 1))
    lat = lda_collapsed_gibbs(model, X, m=100, t=50, seed=sum(x) + 1)
    _, p = enumerate_lda_posterior(model, np.array(x))
    tv = 0.5 * np.abs(_empirical(lat.draws, 2) - p).sum()
    assert tv <= 0.02


def test_gibbs_larger_instance():
    model = LdaModel([0.2, 0.6, 1.0], np.random.default_rng(4).dirichlet(np.ones(3), size=3))
    x = np.array([0, 2, 1])
    lat = lda_collapsed_gibbs(model, np.tile(x, (2000, 1)), m=50, t=50, seed=3)
    _, p = enumerate_lda_posterior(model, x)
    assert 0.5 * np.abs(_empirical(lat.draws, 3) - p).sum() <= 0.02


def _exact_score(model, x):
    Z, p = enumerate_lda_posterior(model, x)
    return (p[:, None] * model.ratio[Z, x[None, :]]).sum(axis=0)


def test_score_estimators_converge_to_exact_posterior_mean():
    model = LdaModel([0.3, 0.8], np.random.default_rng(5).dirichlet(np.ones(4), size=2))
    X = np.array([[0, 1, 3], [2, 2, 0], [3, 1, 1]])
    lat = lda_collapsed_gibbs(model, X, m=20_000, t=100, seed=0)
    exact = np.array([_exact_score(model, x) for x in X])
    # batch means over consecutive blocks of draws give honest standard errors
    blocks = np.split(lat.draws, 50, axis=1)
    for est in (lambda d: model.batch_cond_score(X, d).mean(axis=1),
                lambda d: model.rao_blackwell_score(X, d, block=2)):
        bm = np.array([est(d) for d in blocks])
        se = bm.std(axis=0, ddof=1) / np.sqrt(len(blocks))
        assert np.all(np.abs(bm.mean(axis=0) - exact) < 4 * se + 1e-12)


def test_rao_blackwell_lowers_variance():
    model = LdaModel([0.2, 0.5, 0.4], np.random.default_rng(6).dirichlet(np.ones(8), size=3))
    X = model.sample(5, 12, np.random.default_rng(0))
    plain, rb = [], []
    for s in range(30):
        lat = lda_collapsed_gibbs(model, X, m=20, t=20, seed=s)
        plain.append(model.batch_cond_score(X, lat.draws).mean(axis=1))
        rb.append(model.rao_blackwell_score(X, lat.draws))
    assert np.var(rb, axis=0).mean() < np.var(plain, axis=0).mean()


def test_gibbs_is_reproducible_and_perturb():
    model = tiny()
    X = np.array([[0, 1], [1, 1]])
    a = lda_collapsed_gibbs(model, X, 10, 10, seed=4).draws
    assert np.array_equal(a, lda_collapsed_gibbs(model, X, 10, 10, seed=4).draws)
    P = model.perturb(0.5)
    assert P.a == pytest.approx(model.a + 0.5)
    Q = model_from_dict(P.to_dict())
    assert np.array_equal(Q.b, P.b)

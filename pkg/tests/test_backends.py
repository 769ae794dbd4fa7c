import numpy as np
import pytest

from steincmp import _backend, _fallback
from steincmp.kernels import bow_counts

core = pytest.importorskip("steincmp._core")


def gibbs_inputs(seed, n=6, D=7, K=3, L=5, S=4):
    r = np.random.default_rng(seed)
    X = r.integers(0, L, size=(n, D)).astype(np.int64)
    b = r.dirichlet(np.ones(L), size=K)
    a = r.uniform(0.1, 1.0, size=K)
    z = r.integers(0, K, size=(n, D)).astype(np.int64)
    counts = np.stack([(z == k).sum(axis=1) for k in range(K)], axis=1).astype(np.int64)
    pos = r.integers(0, D, size=(n, S * D)).astype(np.int64)
    unif = r.random((n, S * D))
    return z, counts, X, b, a, pos, unif


def test_selected_backend_is_compiled():
    assert _backend.NAME == "cython"
    assert _backend.fallback.NAME == "python"


@pytest.mark.parametrize("seed", range(5))
def test_gibbs_sweeps_identical(seed):
    outs = []
    for impl in (core, _fallback):
        z, counts, X, b, a, pos, unif = gibbs_inputs(seed)
        out = np.full((6, 3, 7), -1, dtype=np.int64)
        impl.lda_gibbs_sweeps(z, counts, X, b, a, pos, unif, out, 0, 1)
        outs.append((z, counts, out))
    for x, y in zip(*outs):
        assert np.array_equal(x, y)


@pytest.mark.parametrize("seed", range(5))
def test_bow_gram_matches(seed):
    r = np.random.default_rng(seed)
    n, D, L = 40, 9, 6
    X = r.integers(0, L, size=(n, D)).astype(np.int64)
    Bc = np.ascontiguousarray(bow_counts(X, L))
    S = r.normal(size=(n, D))
    H1 = core.bow_stein_gram(X, Bc, S)
    H2 = _fallback.bow_stein_gram(X, Bc, S)
    assert np.allclose(H1, H2, rtol=1e-12, atol=1e-13)
    assert np.array_equal(H1, H1.T)


def test_read_only_inputs_accepted():
    z, counts, X, b, a, pos, unif = gibbs_inputs(0)
    for arr in (X, b, a, pos, unif):
        arr.setflags(write=False)
    core.lda_gibbs_sweeps(z, counts, X, b, a, pos, unif, None, 0, 10)


def test_env_override_selects_fallback():
    import os
    import subprocess
    import sys
    env = dict(os.environ, STEINCMP_BACKEND="python")
    out = subprocess.run([sys.executable, "-c", "from steincmp import _backend; print(_backend.NAME)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"

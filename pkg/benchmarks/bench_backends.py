"""Time the compiled core against the numpy fallback on the two hot loops.

    python benchmarks/bench_backends.py [--repeat 5] [--json out.json]

Both backends are fed identical inputs; outputs are compared before timing.
"""
import argparse
import json
import timeit

import numpy as np

from steincmp import _fallback
from steincmp.kernels import bow_counts

try:
    from steincmp import _core
except ImportError:  # pragma: no cover
    _core = None


def gibbs_case(n, D, K=3, L=100, sweeps=20, seed=0):
    r = np.random.default_rng(seed)
    X = r.integers(0, L, size=(n, D)).astype(np.int64)
    b = r.dirichlet(np.ones(L), size=K)
    a = np.full(K, 0.5)
    z0 = r.integers(0, K, size=(n, D)).astype(np.int64)
    counts0 = np.stack([(z0 == k).sum(axis=1) for k in range(K)], axis=1).astype(np.int64)
    pos = r.integers(0, D, size=(n, sweeps * D)).astype(np.int64)
    unif = r.random((n, sweeps * D))

    def run(impl):
        z, counts = z0.copy(), counts0.copy()
        out = np.empty((n, sweeps, D), dtype=np.int64)
        impl.lda_gibbs_sweeps(z, counts, X, b, a, pos, unif, out, 0, 0)
        return out

    return f"gibbs n={n} D={D} sweeps={sweeps}", run


def gram_case(n, D, L=100, seed=0):
    r = np.random.default_rng(seed)
    X = r.integers(0, L, size=(n, D)).astype(np.int64)
    Bc = np.ascontiguousarray(bow_counts(X, L))
    S = r.normal(size=(n, D))

    def run(impl):
        return impl.bow_stein_gram(X, Bc, S)

    return f"bow gram n={n} D={D}", run


def best_of(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", default=None)
    args = ap.parse_args()
    if _core is None:
        raise SystemExit("compiled core not built; run `pip install -e . --no-build-isolation` first")

    cases = [gibbs_case(100, 50), gibbs_case(300, 50), gram_case(100, 50), gram_case(300, 50)]
    rows = []
    print(f"{'case':<32} {'cython s':>10} {'python s':>10} {'speedup':>8}")
    for name, run in cases:
        a, b = run(_core), run(_fallback)
        if not np.allclose(a, b, rtol=1e-12, atol=1e-13):
            raise SystemExit(f"backends disagree on {name}")
        tc = best_of(lambda: run(_core), args.repeat)
        tp = best_of(lambda: run(_fallback), args.repeat)
        rows.append({"case": name, "cython_s": tc, "python_s": tp, "speedup": tp / tc})
        print(f"{name:<32} {tc:>10.4f} {tp:>10.4f} {tp / tc:>7.1f}x")
    if args.json:
        with open(args.json, "w") as f:
            json.dump(rows, f, indent=2)


if __name__ == "__main__":
    main()

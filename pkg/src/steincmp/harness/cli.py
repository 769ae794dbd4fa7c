"""Command line entry point: ``steincmp {test,experiment,gram,oracle}``.

Exit codes: 0 success, 1 runtime failure, 2 bad input or configuration.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from ..kernels import BoWGaussianKernel, ExpHammingKernel, GaussianKernel, median_heuristic
from ..models import model_from_dict
from ..oracles import GaussianSpec, gaussian_ksd_sq, gaussian_mmd_sq_diff
from ..reltest import TestConfig, relative_test
from ..stein import stein_gram
from .config import ConfigError, ExperimentConfig
from .experiment import (
    ExperimentFailed,
    default_kernel,
    run_experiment,
    run_identical_models,
    sample_latents,
    score_estimate,
)

logger = logging.getLogger("steincmp")


class InputError(Exception):
    """Bad user input; maps to exit code 2."""


def _read_json(path):
    try:
        with open(path) as f:
            return json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise InputError(f"cannot read JSON from {path}: {e}") from e


def _read_data(path, discrete: bool):
    try:
        X = np.loadtxt(path, delimiter=",", ndmin=2)
    except (OSError, ValueError) as e:
        raise InputError(f"cannot read CSV data from {path}: {e}") from e
    if X.shape[0] < 4:
        raise InputError("need at least 4 observations")
    if discrete:
        if not np.all(X == np.round(X)):
            raise InputError("discrete models need integer data")
        X = X.astype(np.int64)
    return X


def _read_model(path):
    try:
        return model_from_dict(_read_json(path))
    except (KeyError, TypeError, ValueError) as e:
        raise InputError(f"invalid model config {path}: {e}") from e


def _read_cov(path):
    d = _read_json(path)
    if isinstance(d, dict):
        d = d.get("cov")
    try:
        return GaussianSpec.centred(np.asarray(d, dtype=float))
    except (TypeError, ValueError) as e:
        raise InputError(f"invalid covariance in {path}: {e}") from e


def _kernel(args, model, X):
    if args.kernel == "auto":
        if args.bandwidth is not None and model.family != "lda":
            return GaussianKernel(args.bandwidth, convention="sq")
        return default_kernel(model, X)
    if args.kernel == "gaussian":
        lam = args.bandwidth if args.bandwidth is not None else median_heuristic(X)
        return GaussianKernel(lam, convention="sq")
    L = getattr(model, "L", None)
    if L is None:
        raise InputError(f"kernel {args.kernel!r} needs a discrete model")
    return BoWGaussianKernel(L) if args.kernel == "bow" else ExpHammingKernel(L)


def _estimator(args, model):
    est = args.score_estimator
    if est == "auto":
        est = "rao-blackwell" if model.family == "lda" else "average"
    if est == "rao-blackwell" and model.family != "lda":
        raise InputError("the rao-blackwell score estimator is only available for lda")
    return est


def _gram_for(model, X, kernel, args, seed_offset):
    seed = None if args.seed is None else args.seed + seed_offset
    latents = sample_latents(model, X, args.m, args.t, seed=seed)
    return stein_gram(score_estimate(model, X, latents, _estimator(args, model)), X, kernel)


# ---------------------------------------------------------------- commands


def cmd_test(args):
    P = _read_model(args.model_p)
    Q = _read_model(args.model_q)
    if P.family != Q.family:
        raise InputError("both models must belong to the same family")
    X = _read_data(args.data, discrete=P.family == "lda")
    try:
        cfg = TestConfig(alpha=args.alpha, variance_method=args.variance, m=args.m, t=args.t)
    except ValueError as e:
        raise InputError(str(e)) from e
    kernel = _kernel(args, P, X)
    report = relative_test(_gram_for(P, X, kernel, args, 0), _gram_for(Q, X, kernel, args, 1), cfg)
    print(report.to_json(indent=2))
    return 0


def cmd_gram(args):
    model = _read_model(args.model)
    X = _read_data(args.data, discrete=model.family == "lda")
    gram = _gram_for(model, X, _kernel(args, model, X), args, 0)
    out = sys.stdout if args.out in (None, "-") else open(args.out, "w")
    try:
        np.savetxt(out, gram.h, delimiter=",", fmt="%.17g")
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def cmd_experiment(args):
    configs = []
    for path in args.config:
        cfg = ExperimentConfig.load(path)
        if args.full_scale:
            cfg = cfg.full_scale()
        if args.trials is not None:
            cfg = ExperimentConfig.from_dict({**cfg.to_dict(), "trials": args.trials})
        configs.append((path, cfg))
    for path, cfg in configs:
        if args.identical:
            table = run_identical_models(cfg, workers=args.workers)
        else:
            table = run_experiment(cfg, workers=args.workers)
        out = args.out
        if len(configs) > 1:
            name = cfg.name or os.path.splitext(os.path.basename(path))[0]
            out = os.path.join(args.out, name)
        table.write(out)
        if not args.quiet:
            sys.stdout.write(table.to_csv())
    return 0


def cmd_oracle(args):
    if args.oracle == "mmd-diff":
        val = gaussian_mmd_sq_diff(_read_cov(args.p), _read_cov(args.q), _read_cov(args.r), args.lam)
        print(repr(val))
    else:
        kernel = GaussianKernel(args.lam, convention=args.convention)
        est, se = gaussian_ksd_sq(_read_cov(args.p), _read_cov(args.r), kernel, args.mc_n, args.seed)
        print(json.dumps({"estimate": est, "std_error": se}))
    return 0


# ------------------------------------------------------------------ parser


def _add_sampling(p):
    p.add_argument("--m", type=int, default=200, help="posterior draws per observation")
    p.add_argument("--t", type=int, default=200, help="burn-in transitions")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--kernel", choices=["auto", "gaussian", "bow", "hamming"], default="auto")
    p.add_argument("--bandwidth", type=float, default=None,
                   help="Gaussian length scale (default: median heuristic)")
    p.add_argument("--score-estimator", choices=["auto", "average", "rao-blackwell"], default="auto")


def build_parser():
    ap = argparse.ArgumentParser(prog="steincmp", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("test", help="relative test of two models on a data file")
    p.add_argument("--data", required=True, help="headerless CSV, one observation per row")
    p.add_argument("--model-p", required=True)
    p.add_argument("--model-q", required=True)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--variance", choices=["vstat", "ustat"], default="vstat")
    _add_sampling(p)
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("experiment", help="run simulation studies from JSON configs")
    p.add_argument("--config", required=True, nargs="+")
    p.add_argument("--out", required=True)
    p.add_argument("--paper-scale", dest="full_scale", action="store_true", help="published sampler settings and trial counts")
    p.add_argument("--identical", action="store_true", help="set delta_q = delta_p and report both variances")
    p.add_argument("--trials", type=int, default=None, help="override the trial count")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("gram", help="dump the Stein Gram of one model as CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--out", default=None)
    _add_sampling(p)
    p.set_defaults(func=cmd_gram)

    p = sub.add_parser("oracle", help="closed-form Gaussian reference values")
    osub = p.add_subparsers(dest="oracle", required=True)
    o = osub.add_parser("mmd-diff", help="MMD^2(p, r) - MMD^2(q, r), zero-mean Gaussians")
    for name in ("p", "q", "r"):
        o.add_argument(f"--{name}", required=True, help="covariance JSON")
    o.add_argument("--lambda", dest="lam", type=float, required=True)
    o.set_defaults(func=cmd_oracle)
    o = osub.add_parser("ksd", help="Monte Carlo KSD^2 of N(0, cov_p) against N(0, cov_r)")
    o.add_argument("--p", required=True)
    o.add_argument("--r", required=True)
    o.add_argument("--lambda", dest="lam", type=float, required=True)
    o.add_argument("--convention", choices=["sq", "half"], default="sq")
    o.add_argument("--mc-n", type=int, default=100_000)
    o.add_argument("--seed", type=int, default=0)
    o.set_defaults(func=cmd_oracle)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (InputError, ConfigError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except ExperimentFailed as e:
        print(f"experiment failed: {e}", file=sys.stderr)
        return 1
    except Exception as e:  # noqa: BLE001
        logger.debug("unhandled error", exc_info=True)
        print(f"runtime error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

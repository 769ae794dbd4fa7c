"""Trial loops and rejection-rate tables for the simulation studies."""
from __future__ import annotations

import csv
import io
import json
import logging
import os
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import binomtest

from ..kernels import BoWGaussianKernel, GaussianKernel, median_heuristic
from ..models import (
    GdpmModel,
    LdaModel,
    PpcaModel,
    gdpm_posterior_sampler,
    lda_collapsed_gibbs,
    ppca_posterior_mcmc,
)
from ..reltest import TestConfig, test_from_diff
from ..stein import average_scores, diff_gram, stein_gram
from .config import ExperimentConfig
from .seeding import rng_for, trial_seed

logger = logging.getLogger(__name__)

CSV_HEADER = ["n", "alpha", "method", "rate", "ci_lo", "ci_hi", "trials"]
MAX_ABORT_FRACTION = 0.05


class ExperimentFailed(RuntimeError):
    pass


# ---------------------------------------------------------------- problems


@dataclass
class Problem:
    reference: object
    model_p: object
    model_q: object


def build_problem(cfg: ExperimentConfig) -> Problem:
    """Reference model and the two perturbed candidates; depends on the seed only."""
    ref = cfg.reference
    rng = rng_for(cfg.seed, "problem")
    if cfg.family == "ppca":
        A = rng.uniform(0.0, 1.0, size=(ref["D"], ref["Dz"]))
        R = PpcaModel(A, ref["psi"])
        return Problem(R, R.perturb(cfg.delta_p), R.perturb(cfg.delta_q))
    if cfg.family == "lda":
        K, L = ref["K"], ref["L"]
        g = rng.standard_gamma(np.ones(L), size=(K, L))
        b = g / g.sum(axis=1, keepdims=True)
        R = LdaModel(np.full(K, ref["a0"]), b)
        return Problem(R, R.perturb(cfg.delta_p), R.perturb(cfg.delta_q))
    if cfg.family == "gdpm":
        D = ref["D"]
        R = GdpmModel(np.zeros(D), ref["phi_sq"])
        train = R.marginal_sample(ref["n_tr"], rng_for(cfg.seed, "training"))
        P = GdpmModel.shifted(cfg.delta_p, D, ref["phi_sq"], train)
        Q = GdpmModel.shifted(cfg.delta_q, D, ref["phi_sq"], train)
        return Problem(R, P, Q)
    raise ValueError(cfg.family)


def _sample_data(cfg, problem, n, rng):
    if cfg.family == "lda":
        return problem.reference.sample(n, cfg.reference["D"], rng)
    if cfg.family == "gdpm":
        return problem.reference.marginal_sample(n, rng)
    return problem.reference.sample(n, rng)


def default_kernel(model, X):
    """BoW Gaussian kernel for LDA, median-heuristic Gaussian otherwise."""
    if model.family == "lda":
        return BoWGaussianKernel(model.L)
    return GaussianKernel(median_heuristic(X), convention="sq")


def sample_latents(model, X, m: int, t: int, seed=None):
    """Posterior draws from the family's sampler."""
    if model.family == "ppca":
        return ppca_posterior_mcmc(model, X, m, t, seed=seed)
    if model.family == "lda":
        return lda_collapsed_gibbs(model, X, m, t, seed=seed)
    if model.family == "gdpm":
        return gdpm_posterior_sampler(model, X, m, t, seed=seed)
    raise ValueError(f"no sampler for family {model.family!r}")


def score_estimate(model, X, latents, estimator: str = "average"):
    if estimator == "rao-blackwell":
        return model.rao_blackwell_score(X, latents.draws)
    return average_scores(model, X, latents)


# ------------------------------------------------------------------ trials


@dataclass
class TrialResult:
    n: int
    trial: int
    rejects: dict = field(default_factory=dict)  # (method, alpha) -> bool
    degenerate: dict = field(default_factory=dict)  # method -> bool
    u_diff: dict = field(default_factory=dict)  # method -> float
    error: str | None = None


def run_trial(cfg: ExperimentConfig, n: int, trial: int, problem: Problem | None = None) -> TrialResult:
    """One trial at sample size n. Exceptions are captured, not raised."""
    problem = problem or build_problem(cfg)
    res = TrialResult(n, trial)
    try:
        X = _sample_data(cfg, problem, n, rng_for(cfg.seed, "data", n, trial))
        kernel = default_kernel(problem.reference, X)
        lat_p = sample_latents(problem.model_p, X, cfg.m, cfg.t, trial_seed(cfg.seed, "sampler_p", n, trial))
        if cfg.shared_draws:
            lat_q = lat_p
        else:
            lat_q = sample_latents(problem.model_q, X, cfg.m, cfg.t, trial_seed(cfg.seed, "sampler_q", n, trial))
        H_p = stein_gram(score_estimate(problem.model_p, X, lat_p, cfg.score_estimator), X, kernel)
        H_q = stein_gram(score_estimate(problem.model_q, X, lat_q, cfg.score_estimator), X, kernel)
        grams = {"LKSD": diff_gram(H_p, H_q)}
        if "KSD-exact" in cfg.methods:
            E_p = stein_gram(problem.model_p.marginal_score(X), X, kernel)
            E_q = stein_gram(problem.model_q.marginal_score(X), X, kernel)
            grams["KSD-exact"] = diff_gram(E_p, E_q)
        for method in cfg.methods:
            gram = grams["KSD-exact" if method == "KSD-exact" else "LKSD"]
            vm = "ustat" if method == "LKSD-U" else "vstat"
            for alpha in cfg.alpha:
                rep = test_from_diff(gram, TestConfig(alpha=alpha, variance_method=vm, m=cfg.m, t=cfg.t))
                res.rejects[(method, alpha)] = rep.reject
                res.degenerate[method] = rep.degenerate
                res.u_diff[method] = rep.u_diff
    except Exception as e:  # noqa: BLE001 - any pipeline error aborts just this trial
        res.error = f"{type(e).__name__}: {e}"
        logger.warning("trial %d (n=%d, seed=%d) aborted: %s", trial, n, cfg.seed, res.error)
        logger.debug("%s", traceback.format_exc())
    return res


# ------------------------------------------------------------------- table


def wilson_interval(k: int, n: int, level: float = 0.95):
    if n == 0:
        return 0.0, 1.0
    ci = binomtest(k, n).proportion_ci(confidence_level=level, method="wilson")
    return float(ci.low), float(ci.high)


@dataclass
class RejectionRow:
    n: int
    alpha: float
    method: str
    rejects: int
    trials: int
    degenerate: int = 0

    @property
    def rate(self) -> float:
        return self.rejects / self.trials if self.trials else float("nan")

    @property
    def wilson_ci(self):
        return wilson_interval(self.rejects, self.trials)


@dataclass
class RejectionTable:
    rows: list
    config: dict
    aborted: list = field(default_factory=list)  # [(n, trial, error)]

    def row(self, n, method, alpha=0.05) -> RejectionRow:
        for r in self.rows:
            if r.n == n and r.method == method and abs(r.alpha - alpha) < 1e-12:
                return r
        raise KeyError((n, method, alpha))

    def rate(self, n, method, alpha=0.05) -> float:
        return self.row(n, method, alpha).rate

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in self.rows:
            lo, hi = r.wilson_ci
            w.writerow([r.n, f"{r.alpha:g}", r.method, f"{r.rate:.6f}", f"{lo:.6f}", f"{hi:.6f}", r.trials])
        return buf.getvalue()

    def to_dict(self) -> dict:
        rows = []
        for r in self.rows:
            lo, hi = r.wilson_ci
            rows.append({
                "n": r.n, "alpha": r.alpha, "method": r.method, "rejects": r.rejects,
                "trials": r.trials, "rate": r.rate, "ci_lo": lo, "ci_hi": hi,
                "degenerate": r.degenerate,
            })
        return {
            "schema_version": 1,
            "config": self.config,
            "rows": rows,
            "aborted": [{"n": n, "trial": t, "error": e} for n, t, e in self.aborted],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def write(self, out_dir) -> None:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "rejection_table.csv"), "w") as f:
            f.write(self.to_csv())
        with open(os.path.join(out_dir, "rejection_table.json"), "w") as f:
            f.write(self.to_json() + "\n")


def aggregate(cfg: ExperimentConfig, results) -> RejectionTable:
    results = sorted(results, key=lambda r: (r.n, r.trial))
    aborted = [(r.n, r.trial, r.error) for r in results if r.error is not None]
    rows = []
    for n in cfg.n:
        ok = [r for r in results if r.n == n and r.error is None]
        for alpha in cfg.alpha:
            for method in cfg.methods:
                rows.append(RejectionRow(
                    n, alpha, method,
                    rejects=sum(bool(r.rejects[(method, alpha)]) for r in ok),
                    trials=len(ok),
                    degenerate=sum(bool(r.degenerate[method]) for r in ok),
                ))
    return RejectionTable(rows, cfg.to_dict(), aborted)


# ---------------------------------------------------------------- drivers


def worker_count(requested: int | None = None) -> int:
    env = os.environ.get("STEINCMP_THREADS")
    cap = os.cpu_count() or 1
    if env:
        try:
            cap = max(1, int(env))
        except ValueError:
            raise ValueError(f"STEINCMP_THREADS must be an integer, got {env!r}") from None
    return max(1, min(cap, requested or cap))


def _run_chunk(args):
    cfg_dict, tasks = args
    cfg = ExperimentConfig.from_dict(cfg_dict)
    problem = build_problem(cfg)
    return [run_trial(cfg, n, trial, problem) for n, trial in tasks]


def run_experiment(cfg: ExperimentConfig, workers: int | None = None, progress=None) -> RejectionTable:
    """Run every (n, trial) pair and tabulate rejection rates.

    Raises :class:`ExperimentFailed` when more than 5% of trials abort.
    The table does not depend on the worker count.
    """
    tasks = [(n, trial) for n in cfg.n for trial in range(cfg.trials)]
    nw = worker_count(workers)
    if nw == 1:
        problem = build_problem(cfg)
        results = []
        for i, (n, trial) in enumerate(tasks):
            results.append(run_trial(cfg, n, trial, problem))
            if progress:
                progress(i + 1, len(tasks))
    else:
        chunks = [tasks[i::nw] for i in range(nw)]
        d = cfg.to_dict()
        with ProcessPoolExecutor(max_workers=nw) as ex:
            results = [r for part in ex.map(_run_chunk, [(d, c) for c in chunks]) for r in part]
    table = aggregate(cfg, results)
    if len(table.aborted) > MAX_ABORT_FRACTION * len(tasks):
        raise ExperimentFailed(
            f"{len(table.aborted)} of {len(tasks)} trials aborted; first: {table.aborted[0]}"
        )
    return table


def run_identical_models(cfg: ExperimentConfig, workers: int | None = None, shared_draws: bool | None = None,
                         progress=None) -> RejectionTable:
    """Both candidates share one perturbation; U and V variance on the same grams."""
    d = cfg.to_dict()
    d["delta_q"] = d["delta_p"]
    d["variance_method"] = "both"
    if shared_draws is not None:
        d["shared_draws"] = bool(shared_draws)
    return run_experiment(ExperimentConfig.from_dict(d), workers=workers, progress=progress)

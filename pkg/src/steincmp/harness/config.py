"""Experiment configuration and its JSON schema.

A config is a JSON object::

    {
      "schema_version": 1,
      "name": "ppca-null",
      "family": "ppca",            # ppca | lda | gdpm
      "delta_p": 1.0,
      "delta_q": 1.1,
      "n": [100, 200, 300],
      "trials": 100,
      "alpha": [0.05],
      "m": 200,                    # optional, family default otherwise
      "t": 100,
      "variance_method": "both",   # vstat | ustat | both
      "seed": 0,
      "reference": {"D": 50, "Dz": 10, "psi": 1.0},
      "shared_draws": false,
      "score_estimator": "rao-blackwell"   # or "average"; LDA only
    }

Unknown keys are rejected so that typos fail loudly.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field

SCHEMA_VERSION = 1

FAMILIES = ("ppca", "lda", "gdpm")

# desk-scale sampler settings and the values used for the published runs
DESK_DEFAULTS = {
    "ppca": {"m": 200, "t": 100},
    "lda": {"m": 200, "t": 1000},
    "gdpm": {"m": 200, "t": 500},
}
FULL_SCALE = {
    "ppca": {"m": 500, "t": 200, "trials": 300},
    "lda": {"m": 500, "t": 5000, "trials": 300},
    "gdpm": {"m": 500, "t": 1000, "trials": 100},
}

REFERENCE_DEFAULTS = {
    "ppca": {"D": 50, "Dz": 10, "psi": 1.0},
    "lda": {"K": 3, "L": 100, "D": 50, "a0": 0.1},
    "gdpm": {"D": 10, "n_tr": 5, "phi_sq": 2.0},
}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    family: str
    delta_p: float
    delta_q: float
    n: list = field(default_factory=lambda: [100, 200, 300])
    trials: int = 100
    alpha: list = field(default_factory=lambda: [0.05])
    m: int | None = None
    t: int | None = None
    variance_method: str = "both"
    seed: int = 0
    reference: dict = field(default_factory=dict)
    shared_draws: bool = False
    score_estimator: str | None = None
    name: str = ""
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        self.family = str(self.family).lower()
        if self.family not in FAMILIES:
            raise ConfigError(f"family must be one of {FAMILIES}, got {self.family!r}")
        if isinstance(self.n, int):
            self.n = [self.n]
        if isinstance(self.alpha, (int, float)):
            self.alpha = [self.alpha]
        self.n = [int(v) for v in self.n]
        self.alpha = [float(a) for a in self.alpha]
        if not self.n or min(self.n) < 4:
            raise ConfigError("every sample size n must be >= 4")
        if int(self.trials) < 1:
            raise ConfigError("trials must be >= 1")
        self.trials = int(self.trials)
        for a in self.alpha:
            if not 0 < a <= 0.5:
                raise ConfigError(f"alpha must lie in (0, 0.5], got {a}")
        if self.variance_method not in ("vstat", "ustat", "both"):
            raise ConfigError(f"unknown variance_method {self.variance_method!r}")
        if self.schema_version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema_version {self.schema_version}")
        d = DESK_DEFAULTS[self.family]
        self.m = int(d["m"] if self.m is None else self.m)
        self.t = int(d["t"] if self.t is None else self.t)
        if self.m < 1 or self.t < 0:
            raise ConfigError("need m >= 1 and t >= 0")
        if self.score_estimator is None:
            self.score_estimator = "rao-blackwell" if self.family == "lda" else "average"
        if self.score_estimator not in ("average", "rao-blackwell"):
            raise ConfigError(f"unknown score_estimator {self.score_estimator!r}")
        if self.score_estimator == "rao-blackwell" and self.family != "lda":
            raise ConfigError("the rao-blackwell score estimator is only available for lda")
        ref = dict(REFERENCE_DEFAULTS[self.family])
        unknown = set(self.reference) - set(ref)
        if unknown:
            raise ConfigError(f"unknown reference keys {sorted(unknown)}")
        ref.update(self.reference)
        self.reference = ref
        self.seed = int(self.seed)
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        self.delta_p = float(self.delta_p)
        self.delta_q = float(self.delta_q)

    @property
    def methods(self) -> list:
        out = []
        if self.variance_method in ("vstat", "both"):
            out.append("LKSD-V")
        if self.variance_method in ("ustat", "both"):
            out.append("LKSD-U")
        if self.family == "ppca":
            out.append("KSD-exact")
        return out

    def full_scale(self) -> "ExperimentConfig":
        return dataclasses.replace(self, **FULL_SCALE[self.family])

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, **kw)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        for key in ("family", "delta_p", "delta_q"):
            if key not in d:
                raise ConfigError(f"missing required key {key!r}")
        try:
            return cls(**d)
        except (TypeError, ValueError) as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError(str(e)) from e

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            with open(path) as f:
                d = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config {path}: {e}") from e
        return cls.from_dict(d)

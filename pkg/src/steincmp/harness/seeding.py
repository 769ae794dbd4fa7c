"""Deterministic random streams for experiments.

Every stream is ``numpy.random.SeedSequence(master, spawn_key=key)`` where
``key`` is a tuple of non-negative integers naming what the stream is for.
Problem construction uses ``(ROLE,)``; per-trial streams use
``(ROLE, n, trial)``, so any single trial can be re-run on its own.
"""
from __future__ import annotations

import numpy as np

ROLES = {
    "problem": 0,
    "training": 1,
    "data": 2,
    "sampler_p": 3,
    "sampler_q": 4,
}


def seed_sequence(master: int, role: str, *key: int) -> np.random.SeedSequence:
    if role not in ROLES:
        raise KeyError(f"unknown stream role {role!r}")
    return np.random.SeedSequence(int(master), spawn_key=(ROLES[role],) + tuple(int(k) for k in key))


def rng_for(master: int, role: str, *key: int) -> np.random.Generator:
    return np.random.default_rng(seed_sequence(master, role, *key))


def trial_seed(master: int, role: str, n: int, trial: int) -> int:
    """A 64-bit integer seed for samplers that take plain integers."""
    return int(seed_sequence(master, role, n, trial).generate_state(1, np.uint64)[0])

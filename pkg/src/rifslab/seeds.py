"""Deterministic stream derivation.

Every random stream in the package is derived from a single master seed
through ``numpy.random.SeedSequence`` spawn keys.  A stream is addressed by
a (role, *indices) tuple, so replica k always sees the same generator no
matter how many replicas run or in which order: that is what makes reports
byte-identical across reruns and stable under replica-count changes.
"""
from __future__ import annotations

import numpy as np

# Stream roles.  Keep values stable: they are part of the reproducibility
# contract and are recorded in batch metadata.
ROLE_ERRORS = 1  # per-replica multiplicative error sequence
ROLE_WORDS = 2  # per-replica symbolic words
ROLE_SWEEP = 3  # per-grid-point sub-master seed
ROLE_PAIRS = 4  # transversality word pairs and error draws
ROLE_ADHOC = 5  # standalone CLI estimators, synthetic data


def seed_sequence(master_seed: int, *key: int) -> np.random.SeedSequence:
    """SeedSequence for the stream addressed by ``key`` under ``master_seed``."""
    return np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(k) for k in key))


def stream(master_seed: int, *key: int) -> np.random.Generator:
    """Independent generator for the stream addressed by ``key``."""
    return np.random.default_rng(seed_sequence(master_seed, *key))


def submaster(master_seed: int, *key: int) -> int:
    """Derive a child master seed (used for sweep grid points)."""
    state = seed_sequence(master_seed, *key).generate_state(2, dtype=np.uint32)
    return int(state[0]) << 32 | int(state[1])

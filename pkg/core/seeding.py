"""Seed plumbing: every random stream in a run derives from one master seed."""

import numpy as np


def make_rng(seed):
    return np.random.default_rng(np.random.SeedSequence(int(seed) & (2 ** 64 - 1)))


def derive_seed(master_seed, *keys):
    """Deterministic 63-bit child seed for (master_seed, *keys).

    Keys are non-negative integers (epoch, instance index, seed index ...).
    """
    sequence = np.random.SeedSequence([int(master_seed) & (2 ** 64 - 1), *[int(k) for k in keys]])
    return int(sequence.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))

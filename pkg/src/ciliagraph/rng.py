"""Seeded generator streams.

Every stochastic step draws from a generator derived from one 64-bit master
seed plus a fixed stream key, so changing how one stage consumes randomness
never perturbs another stage.
"""

import numpy as np

SPLIT_STREAM = 0
BANK_STREAM = 1
BASELINE_STREAM = 2


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    seq = np.random.SeedSequence(entropy=int(seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=tuple(stream))
    return np.random.Generator(np.random.PCG64(seq))

"""
Named random sub-streams derived from one master seed.

Every stream is a `numpy.random.SeedSequence` keyed by (stream, *keys), so
results never depend on the order in which rows or trials are processed.
"""
import enum

import numpy as np

SEED_MASK = (1 << 64) - 1


class Stream(int, enum.Enum):
    """Sub-stream identifiers."""

    LABELING = 1
    TIE_BREAKS = 2
    RESAMPLING = 3
    SPLIT = 4
    FOLDS = 5
    SIMULATION = 6
    MONTE_CARLO = 7
    POOL_LABELING = 8
    POOL_TIE_BREAKS = 9


def seed_sequence(seed: int, stream: Stream, *keys: int) -> np.random.SeedSequence:
    """SeedSequence for `stream` under `seed`, further keyed by `keys`."""
    return np.random.SeedSequence(
        entropy=int(seed) & SEED_MASK,
        spawn_key=(int(stream), *(int(k) for k in keys)),
    )


def substream(seed: int, stream: Stream, *keys: int) -> np.random.Generator:
    """Independent generator for `stream` under `seed`."""
    return np.random.default_rng(seed_sequence(seed, stream, *keys))


def derive_seed(seed: int, stream: Stream, *keys: int) -> int:
    """Derive a fresh 64-bit integer seed, e.g. to hand to a nested run."""
    state = seed_sequence(seed, stream, *keys).generate_state(1, dtype=np.uint64)
    return int(state[0])


def int32_seed(seed: int) -> int:
    """Fold a 64-bit seed into the range scikit-learn accepts."""
    return int(seed) % (2**32)

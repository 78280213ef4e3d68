"""Counter-based seed derivation.

Every random draw in the package comes from a stream keyed by
``(seed, *key)``.  Stream ``i`` is ``SeedSequence(seed, spawn_key=(i,))``,
which hashes the master seed together with the counter, so row ``i`` of a
batch does not depend on how many rows were drawn before it or on how the
batch is split across workers.
"""
import numpy as np

MAX_SEED = 2**64 - 1


def check_seed(seed) -> int:
    seed = int(seed)
    if not 0 <= seed <= MAX_SEED:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(check_seed(seed), spawn_key=tuple(int(k) for k in key)))


def normal_rows(seed: int, n: int, d: int, offset: int = 0, tag: int = 0) -> np.ndarray:
    """Standard-normal ``(n, d)`` matrix; row ``i`` is drawn from stream ``(seed, tag, offset + i)``."""
    out = np.empty((n, d))
    for i in range(n):
        out[i] = stream(seed, tag, offset + i).standard_normal(d)
    return out


# stream tags keep independent consumers of one master seed apart
TAG_GMM = 1
TAG_FORWARD = 2
TAG_SUBSAMPLE = 3
TAG_LOGIT_NOISE = 4
TAG_SHELL = 5
TAG_INTERP = 6
TAG_DATA_PICK = 7

"""Deterministic counter-based random streams.

Every random decision in a run is drawn from a stream addressed by a
(purpose, client, round) key derived from the run seed with a splitmix64
chain.  Streams never share state, so enabling one consumer (e.g. channel
noise) cannot shift the draws seen by another (e.g. the schedule).
"""
from __future__ import annotations

import numpy as np

from . import _kernels

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

# Stream purposes.  Values are arbitrary but frozen: changing them changes
# every derived stream.
SCHEDULE = 0x53
DOWNLINK = 0xD1
UPLINK = 0xD2
SHARD_ORDER = 0x0E
DATA = 0xDA
REPLICA = 0x4E


def _finalize(z: int) -> int:
    z &= _MASK
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK
    return z ^ (z >> 31)


def derive_key(seed: int, *parts: int) -> int:
    """Fold a seed and key parts into a 64-bit stream key."""
    h = _finalize((seed + _GOLDEN) & _MASK)
    for p in parts:
        h = _finalize((h + _GOLDEN + p) & _MASK)
    return h


def extend_key(prefix: int, *parts: int) -> int:
    """Continue a derive_key chain: extend_key(derive_key(s, a), b) ==
    derive_key(s, a, b)."""
    h = prefix
    for p in parts:
        h = _finalize((h + _GOLDEN + p) & _MASK)
    return h


def uniforms(key: int, n: int) -> np.ndarray:
    """n uniforms in [0, 1) for the stream at `key`."""
    out = np.empty(n, dtype=np.float64)
    _kernels.fill_uniforms(np.uint64(key), out)
    return out


def normals(key: int, n: int) -> np.ndarray:
    """n standard normals (Box-Muller) for the stream at `key`."""
    out = np.empty(n, dtype=np.float64)
    _kernels.fill_normals(np.uint64(key), out)
    return out


def permutation(key: int, n: int) -> np.ndarray:
    """A fixed permutation of range(n) determined by `key`."""
    return np.argsort(uniforms(key, n), kind="stable").astype(np.int64)


def schedule_block(seed: int, t: int, num_clients: int, draws: int) -> np.ndarray:
    """Per-client uniform draws for round t, shape (num_clients, draws).

    Row i is the substream for (SCHEDULE, client i, round t); it is the same
    no matter which other streams are consumed.
    """
    base = derive_key(seed, SCHEDULE, t)
    out = np.empty((num_clients, draws), dtype=np.float64)
    _kernels.fill_uniform_rows(np.uint64(base), out)
    return out


def generator(key: int) -> np.random.Generator:
    """A full numpy Generator for one-off, non-hot-path sampling."""
    return np.random.Generator(np.random.Philox(key=key))

"""Deterministic random-stream management.

Every stochastic operation takes an explicit stream argument.  Streams are
numpy SeedSequences; children are derived functionally from the root seed and
an integer path, so stream(seed, i, j) is reproducible without any shared
state:

    stream i of a root = SeedSequence(entropy=root.entropy,
                                      spawn_key=root.spawn_key + (i,))

String path components are hashed (blake2s) to 62-bit integers first.
"""
from __future__ import annotations

import hashlib

import numpy as np


def _as_key(part) -> int:
    if isinstance(part, (int, np.integer)):
        if part < 0:
            raise ValueError("stream path components must be nonnegative")
        return int(part)
    digest = hashlib.blake2s(str(part).encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big") >> 2


def root_stream(seed: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(int(seed))


def substream(ss: np.random.SeedSequence, *path) -> np.random.SeedSequence:
    """Child stream at `path` below `ss`, independent of call order."""
    key = tuple(ss.spawn_key) + tuple(_as_key(p) for p in path)
    return np.random.SeedSequence(entropy=ss.entropy, spawn_key=key)


def generator(ss: np.random.SeedSequence, *path) -> np.random.Generator:
    if path:
        ss = substream(ss, *path)
    return np.random.default_rng(ss)

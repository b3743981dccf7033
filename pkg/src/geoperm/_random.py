"""Reproducible random substreams keyed by integers (seed, radius, block, ...)."""

from __future__ import annotations

import numpy as np

# leading key per consumer so their streams never coincide
STREAM_RADIAL = 0
STREAM_PERM = 1
STREAM_SDA = 2


def substream(seed: int | None, *key: int) -> np.random.Generator:
    """Independent generator for ``key`` under ``seed``.

    The same ``(seed, key)`` always yields the same stream, whatever order or
    worker the caller runs in.
    """
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def derive_seed(seed: int | None, *key: int) -> int:
    """Integer seed for a sub-task (e.g. one trait of a batch) under ``seed``."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))

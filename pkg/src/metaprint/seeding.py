"""Deterministic RNG derivation.

Every random draw in the package flows through a seed chain built from
explicit integer/string keys, so results are reproducible across runs,
processes, and worker counts.
"""

from __future__ import annotations

import zlib

import numpy as np

_MASK64 = (1 << 64) - 1


def _key_to_int(key: int | str) -> int:
    if isinstance(key, str):
        return zlib.crc32(key.encode("utf-8"))
    return int(key) & _MASK64


def seed_sequence(*keys: int | str) -> np.random.SeedSequence:
    """Build a SeedSequence from a mix of integer and string keys."""
    if not keys:
        raise ValueError("at least one key is required")
    return np.random.SeedSequence([_key_to_int(k) for k in keys])


def rng(*keys: int | str) -> np.random.Generator:
    """PCG64 generator for the given key chain."""
    return np.random.Generator(np.random.PCG64(seed_sequence(*keys)))


def derive_seed(*keys: int | str) -> int:
    """Collapse a key chain into a single reproducible integer seed."""
    return int(seed_sequence(*keys).generate_state(1, np.uint64)[0])

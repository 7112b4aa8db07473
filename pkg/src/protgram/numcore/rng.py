"""Seeded, per-subsystem random streams."""

from __future__ import annotations

import zlib

import numpy as np


def seeded_rng(seed: int, subsystem: str = "") -> np.random.Generator:
    """Deterministic generator for ``(seed, subsystem)``.

    Different subsystem labels give independent streams from the same master
    seed, so e.g. changing the number of dropout draws never shifts weight
    initialization.
    """
    key = zlib.crc32(subsystem.encode("utf-8"))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(key,))))


def glorot_uniform(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))

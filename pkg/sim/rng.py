"""
Deterministic random streams.

Every stream is a numpy PCG64 generator (64-bit permuted congruential
generator) seeded from the scenario seed plus a stable per-subsystem tag, so
gap sampling and nonce generation never perturb each other's draws.
"""

import zlib
from typing import Optional

import numpy as np


def _tag_word(tag: str) -> int:
    # Stable hashing (never the built-in hash(), which is salted per process)
    return zlib.crc32(tag.encode("utf-8")) & 0xFFFFFFFF


def get_rng(seed: int, tag: Optional[str] = None) -> np.random.Generator:
    """Generator for `seed`; a tag derives an independent sub-stream."""
    words = [int(seed) & 0xFFFFFFFFFFFFFFFF]
    if tag is not None:
        words.append(_tag_word(tag))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(words)))

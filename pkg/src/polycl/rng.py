"""Splittable seeding.

Every randomized operation in the package takes an explicit 64-bit seed and
derives sub-seeds with :func:`mix64` instead of sharing a mutable generator.
The mix is a splitmix64 chain: the seed is finalized once, then each extra
word is XORed in and finalized again.  It is cheap, stateless, and gives
independent-looking streams for neighbouring inputs such as
``(batch_seed, anchor_index, branch)``.
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1

# Branch tags mixed into per-purpose seed derivations.
BRANCH_I = 0
BRANCH_J = 1
TAG_DROPOUT = 0x9277
TAG_SHUFFLE = 0x51F5
TAG_BATCH = 0xB47C
TAG_EVAL = 0xE7A1
TAG_INIT = 0x1A17
TAG_FOLD = 0xF01D


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def mix64(seed: int, *parts: int) -> int:
    """Derive a 64-bit sub-seed from ``seed`` and any number of index words."""
    h = _splitmix64(seed & _MASK64)
    for p in parts:
        h = _splitmix64(h ^ (p & _MASK64))
    return h


def torch_seed(seed: int) -> int:
    """Clamp a 64-bit seed to the non-negative int64 range torch accepts."""
    return seed & ((1 << 63) - 1)

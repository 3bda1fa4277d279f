"""String-level augmentation: the two views behind each positive pair.

Four explicit modes: Original (the anchor's own tokens), Enumeration (a
random traversal of the same molecule), Masking (replace a token fraction
with [MASK]), Drop (delete a token fraction).  Implicit augmentation is
encoder dropout and is only recorded here; the encoder acts on it.

Replacement and deletion counts use round-half-up of ratio * length, so a
ratio of 0.1 leaves sequences shorter than 5 tokens untouched.  Attachment
tokens "[*]" are as maskable and droppable as any other token.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from .errors import EmptyResultError, InvalidRatioError, PolyclError
from .rng import BRANCH_I, BRANCH_J, mix64
from .smiles_core import (
    MASK,
    Token,
    TokenKind,
    TokenSequence,
    enumerate_random,
    parse,
    tokenize,
)


class ExplicitMode(Enum):
    ORIGINAL = "Original"
    ENUMERATION = "Enumeration"
    MASKING = "Masking"
    DROP = "Drop"


@dataclass(frozen=True)
class AugmentationSpec:
    """Which augmentation each branch applies, plus the token fraction for
    Masking/Drop.  (Original, Original, implicit_dropout=False) is the
    no-augmentation baseline."""

    branch_i: ExplicitMode = ExplicitMode.ENUMERATION
    branch_j: ExplicitMode = ExplicitMode.MASKING
    implicit_dropout: bool = True
    ratio: float = 0.10

    def __post_init__(self) -> None:
        _check_ratio(self.ratio)

    @property
    def is_baseline(self) -> bool:
        return (
            self.branch_i is ExplicitMode.ORIGINAL
            and self.branch_j is ExplicitMode.ORIGINAL
            and not self.implicit_dropout
        )

    def label(self) -> str:
        suffix = "+dropout" if self.implicit_dropout else ""
        return f"{self.branch_i.value}-{self.branch_j.value}{suffix}"


@dataclass(frozen=True)
class PositivePair:
    """Two views of one anchor; reconstructible bit-exactly from
    (anchor_id, spec, seeds)."""

    anchor_id: int
    view_i: TokenSequence
    view_j: TokenSequence
    seeds: tuple[int, int]


def _check_ratio(ratio: float) -> None:
    if not 0.0 <= ratio < 1.0:
        raise InvalidRatioError(f"ratio must lie in [0, 1), got {ratio}")


def change_count(n_tokens: int, ratio: float) -> int:
    """Round-half-up count of tokens to mask or drop."""
    return int(n_tokens * ratio + 0.5)


def _check_plain(seq: Sequence[Token]) -> None:
    if not seq:
        raise ValueError("cannot augment an empty token sequence")
    for tok in seq:
        if tok.kind is TokenKind.SPECIAL:
            raise ValueError(f"special token {tok.text} in augmentation input")


def mask_tokens(seq: TokenSequence, ratio: float, rng_seed: int) -> TokenSequence:
    """Replace round(ratio * len) uniformly chosen positions with [MASK]."""
    _check_ratio(ratio)
    _check_plain(seq)
    k = change_count(len(seq), ratio)
    if k == 0:
        return tuple(seq)
    positions = set(random.Random(rng_seed).sample(range(len(seq)), k))
    return tuple(MASK if i in positions else tok for i, tok in enumerate(seq))


def drop_tokens(seq: TokenSequence, ratio: float, rng_seed: int) -> TokenSequence:
    """Delete round(ratio * len) uniformly chosen positions, keeping order."""
    _check_ratio(ratio)
    _check_plain(seq)
    k = change_count(len(seq), ratio)
    if k == 0:
        return tuple(seq)
    if k >= len(seq):
        raise EmptyResultError(
            f"dropping {k} of {len(seq)} tokens would empty the sequence"
        )
    positions = set(random.Random(rng_seed).sample(range(len(seq)), k))
    return tuple(tok for i, tok in enumerate(seq) if i not in positions)


def make_view(
    anchor: str, mode: ExplicitMode, ratio: float, rng_seed: int
) -> TokenSequence:
    """One augmented view of ``anchor`` under ``mode``.

    Original ignores the seed; Enumeration re-traverses the parsed molecule;
    Masking and Drop act on the anchor's own token sequence.
    """
    _check_ratio(ratio)
    if mode is ExplicitMode.ORIGINAL:
        return tokenize(anchor)
    if mode is ExplicitMode.ENUMERATION:
        return tokenize(enumerate_random(parse(anchor), rng_seed))
    if mode is ExplicitMode.MASKING:
        return mask_tokens(tokenize(anchor), ratio, rng_seed)
    return drop_tokens(tokenize(anchor), ratio, rng_seed)


def pair_seeds(batch_seed: int, anchor_id: int) -> tuple[int, int]:
    """Per-branch seeds for one anchor, split from the batch seed."""
    return (
        mix64(batch_seed, anchor_id, BRANCH_I),
        mix64(batch_seed, anchor_id, BRANCH_J),
    )


def make_pair_batch(
    anchors: Sequence[str], spec: AugmentationSpec, batch_seed: int
) -> list[PositivePair]:
    """Positive pairs for all anchors, in input order.

    Per-pair seeds come from mix64(batch_seed, anchor index, branch tag), so
    any pair can be rebuilt in isolation.  Errors are re-raised with the
    anchor index attached.
    """
    if not anchors:
        raise EmptyResultError("pair batch needs at least one anchor")
    pairs: list[PositivePair] = []
    for anchor_id, anchor in enumerate(anchors):
        seed_i, seed_j = pair_seeds(batch_seed, anchor_id)
        try:
            view_i = make_view(anchor, spec.branch_i, spec.ratio, seed_i)
            view_j = make_view(anchor, spec.branch_j, spec.ratio, seed_j)
        except PolyclError as exc:
            exc.args = (f"anchor {anchor_id}: {exc.args[0]}",) + exc.args[1:]
            raise
        pairs.append(PositivePair(anchor_id, view_i, view_j, (seed_i, seed_j)))
    return pairs

"""Alignment and uniformity of an embedding space, plus the
enumeration-pair evaluation protocol.

Alignment is the mean squared Euclidean distance between the embeddings of
known positive pairs; uniformity is the log of the mean Gaussian potential
exp(-2 d^2) over all unordered distinct embedding pairs.  Both metrics are
computed on L2-normalized vectors (they are defined on the unit
hypersphere) and on pooled h, before the projector, so encoders without a
projector are comparable.

``evaluate_representation`` embeds every corpus molecule and one enumerated
variant of it with dropout off, then reports (alignment over those pairs,
uniformity over the original-molecule embeddings).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import torch

from .encoder import to_input_ids
from .errors import EmptySetError, TooFewPointsError, ZeroVectorError
from .rng import TAG_EVAL, mix64
from .smiles_core import Vocabulary, enumerate_random, parse, tokenize

_NORM_FLOOR = 1e-12


def _as_vector(x) -> np.ndarray:
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError(f"expected a vector, got shape {v.shape}")
    return v


def _unit(v: np.ndarray, what: str) -> np.ndarray:
    norm = float(np.linalg.norm(v))
    if norm <= _NORM_FLOOR:
        raise ZeroVectorError(f"{what} has norm {norm:.3e}, below {_NORM_FLOOR}")
    return v / norm


def cosine_similarity(u, v) -> float:
    """u.v / (|u||v|); exactly 1.0 when u and v are element-identical."""
    u, v = _as_vector(u), _as_vector(v)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    un, vn = _unit(u, "first argument"), _unit(v, "second argument")
    if np.array_equal(u, v):
        return 1.0
    return float(np.dot(un, vn))


@dataclass
class EvalPairSet:
    """Positive-pair embeddings plus the full embedding sample; rows of
    ``all_embeddings`` are the f(x) side of ``pairs`` in corpus order."""

    pairs: list[tuple[np.ndarray, np.ndarray]]
    all_embeddings: np.ndarray

    def __post_init__(self) -> None:
        self.all_embeddings = np.asarray(self.all_embeddings, dtype=np.float64)
        self.pairs = [(_as_vector(a), _as_vector(b)) for a, b in self.pairs]
        for a, b in self.pairs:
            if a.shape != b.shape or (
                self.all_embeddings.size and a.shape[0] != self.all_embeddings.shape[1]
            ):
                raise ValueError("embedding dimensions disagree")
        if not all(np.isfinite(a).all() and np.isfinite(b).all() for a, b in self.pairs):
            raise ValueError("non-finite pair embedding")
        if not np.isfinite(self.all_embeddings).all():
            raise ValueError("non-finite embedding row")


def alignment_loss(pairs: Sequence[tuple[np.ndarray, np.ndarray]] | EvalPairSet) -> float:
    """Mean squared distance between normalized positive-pair embeddings."""
    if isinstance(pairs, EvalPairSet):
        pairs = pairs.pairs
    if len(pairs) == 0:
        raise EmptySetError("alignment needs at least one pair")
    total = 0.0
    for k, (a, b) in enumerate(pairs):
        an = _unit(_as_vector(a), f"pair {k} left embedding")
        bn = _unit(_as_vector(b), f"pair {k} right embedding")
        total += float(np.sum((an - bn) ** 2))
    return total / len(pairs)


def uniformity_loss(embeddings) -> float:
    """log mean over unordered distinct pairs of exp(-2 |x_i - x_j|^2),
    rows unit-normalized first; always <= 0, and 0 iff all rows coincide."""
    x = np.asarray(embeddings, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {x.shape}")
    n = x.shape[0]
    if n < 2:
        raise TooFewPointsError(f"uniformity needs at least 2 rows, got {n}")
    rows = np.stack([_unit(x[i], f"row {i}") for i in range(n)])
    # row-major pair order (0,1), (0,2), ... keeps summation order fixed
    potentials = []
    for i in range(n - 1):
        d2 = np.sum((rows[i + 1 :] - rows[i]) ** 2, axis=1)
        potentials.append(np.exp(-2.0 * d2))
    return float(np.log(np.mean(np.concatenate(potentials))))


def build_eval_pairs(corpus, encoder, vocab: Vocabulary, seed: int) -> EvalPairSet:
    """Embed each molecule and one enumerated variant, dropout off,
    h-space.  The variant's traversal seed is mix64(seed, TAG_EVAL, index),
    so any single pair can be rebuilt in isolation."""
    if len(corpus) == 0:
        raise EmptySetError("evaluation corpus is empty")
    originals = [tokenize(s) for s in corpus]
    variants = [
        tokenize(enumerate_random(parse(s), mix64(seed, TAG_EVAL, i)))
        for i, s in enumerate(corpus)
    ]
    max_len = encoder.config.max_len
    with torch.no_grad():
        h_orig, _ = encoder(to_input_ids(originals, vocab, max_len))
        h_var, _ = encoder(to_input_ids(variants, vocab, max_len))
    a = h_orig.detach().numpy().astype(np.float64)
    b = h_var.detach().numpy().astype(np.float64)
    return EvalPairSet(list(zip(a, b)), a)


def evaluate_representation(
    corpus, encoder, vocab: Vocabulary, seed: int
) -> tuple[float, float]:
    """(alignment, uniformity) of the encoder over ``corpus`` under the
    enumeration-pair protocol."""
    pairs = build_eval_pairs(corpus, encoder, vocab, seed)
    return alignment_loss(pairs), uniformity_loss(pairs.all_embeddings)

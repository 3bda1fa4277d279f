"""Compact transformer encoder mapping token sequences to (h, z).

Architecture: learned token + position embeddings, pre-norm self-attention
blocks, a final layer norm, [CLS] pooling for the representation h, and a
two-layer projector (hidden width d_model, rectified linear between the
layers) for the latent z used by the contrastive loss.

Dropout sits on attention probabilities and on each sublayer output, always
at ``dropout_ratio``, and is driven by an explicit seed: with
``dropout_active=False`` the forward pass is a deterministic pure function
of (parameters, input); with it on, a fixed seed fixes the output and two
different seeds give different embeddings for the same input, which is the
implicit augmentation.

Everything runs in 64-bit floats so tests can use tight tolerances.
Checkpoints are a documented binary layout (see docs/checkpoint_format.md):
magic, version, config fields, parameter tensors in declaration order as
little-endian float64, and a trailing CRC-32.
"""

from __future__ import annotations

import math
import struct
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from torch import nn

from .augmentation import AugmentationSpec, PositivePair
from .errors import (
    CheckpointError,
    NumericError,
    SequenceTooLongError,
    UnknownTokenIdError,
)
from .rng import BRANCH_I, BRANCH_J, TAG_DROPOUT, mix64, torch_seed
from .smiles_core import CLS, PAD_ID, SEP, TokenSequence, Vocabulary

CHECKPOINT_MAGIC = b"PCLENC01"
CHECKPOINT_VERSION = 1
_HEADER = struct.Struct("<8sI7Id")  # magic, version, 7 config ints, dropout


@dataclass(frozen=True)
class EncoderConfig:
    """Hyperparameters fixing the encoder's architecture.

    The default is the desk-scale configuration; :meth:`paper_shape`
    reproduces the 600-dimensional pooled representation projected to a
    128-dimensional latent, for shape tests only.
    """

    vocab_size: int
    d_model: int = 64
    n_layers: int = 2
    n_heads: int = 4
    d_feedforward: int = 128
    max_len: int = 128
    dropout_ratio: float = 0.1
    projector_out: int = 32

    def __post_init__(self) -> None:
        for name in ("vocab_size", "d_model", "n_layers", "n_heads",
                     "d_feedforward", "max_len", "projector_out"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.d_model % self.n_heads != 0:
            raise ValueError(
                f"d_model={self.d_model} not divisible by n_heads={self.n_heads}"
            )
        if not 0.0 <= self.dropout_ratio < 1.0:
            raise ValueError(f"dropout_ratio must lie in [0, 1), got {self.dropout_ratio}")

    @classmethod
    def paper_shape(cls, vocab_size: int) -> "EncoderConfig":
        return cls(
            vocab_size=vocab_size,
            d_model=600,
            n_layers=2,
            n_heads=6,
            d_feedforward=1200,
            projector_out=128,
        )


@dataclass
class EmbeddingBatch:
    """Pooled representations and projected latents for a batch, with the
    (anchor_id, branch) provenance of each row."""

    h: torch.Tensor
    z: torch.Tensor
    provenance: list[tuple[int, int]]

    def __post_init__(self) -> None:
        if not (self.h.shape[0] == self.z.shape[0] == len(self.provenance)):
            raise ValueError("h, z, and provenance row counts disagree")
        if not bool(torch.isfinite(self.h).all() and torch.isfinite(self.z).all()):
            raise NumericError("non-finite entries in embedding batch")


def _dropout(x: torch.Tensor, p: float, gen: torch.Generator | None) -> torch.Tensor:
    if gen is None or p == 0.0:
        return x
    keep = (torch.rand(x.shape, generator=gen, dtype=x.dtype) >= p).to(x.dtype)
    return x * keep / (1.0 - p)


class _SelfAttention(nn.Module):
    def __init__(self, cfg: EncoderConfig):
        super().__init__()
        self.n_heads = cfg.n_heads
        self.d_head = cfg.d_model // cfg.n_heads
        self.p = cfg.dropout_ratio
        self.q_proj = nn.Linear(cfg.d_model, cfg.d_model)
        self.k_proj = nn.Linear(cfg.d_model, cfg.d_model)
        self.v_proj = nn.Linear(cfg.d_model, cfg.d_model)
        self.out_proj = nn.Linear(cfg.d_model, cfg.d_model)

    def forward(
        self, x: torch.Tensor, pad_mask: torch.Tensor, gen: torch.Generator | None
    ) -> torch.Tensor:
        b, length, _ = x.shape

        def split(t: torch.Tensor) -> torch.Tensor:
            return t.view(b, length, self.n_heads, self.d_head).transpose(1, 2)

        q, k, v = split(self.q_proj(x)), split(self.k_proj(x)), split(self.v_proj(x))
        scores = q @ k.transpose(-1, -2) / math.sqrt(self.d_head)
        # key-side masking only: every query still sees [CLS], so no row is
        # fully masked and padded keys get exactly zero probability
        scores = scores.masked_fill(pad_mask[:, None, None, :], float("-inf"))
        probs = torch.softmax(scores, dim=-1)
        probs = _dropout(probs, self.p, gen)
        ctx = (probs @ v).transpose(1, 2).reshape(b, length, -1)
        return self.out_proj(ctx)


class _Block(nn.Module):
    def __init__(self, cfg: EncoderConfig):
        super().__init__()
        self.p = cfg.dropout_ratio
        self.norm1 = nn.LayerNorm(cfg.d_model)
        self.attn = _SelfAttention(cfg)
        self.norm2 = nn.LayerNorm(cfg.d_model)
        self.ff = nn.Sequential(
            nn.Linear(cfg.d_model, cfg.d_feedforward),
            nn.ReLU(),
            nn.Linear(cfg.d_feedforward, cfg.d_model),
        )

    def forward(
        self, x: torch.Tensor, pad_mask: torch.Tensor, gen: torch.Generator | None
    ) -> torch.Tensor:
        x = x + _dropout(self.attn(self.norm1(x), pad_mask, gen), self.p, gen)
        x = x + _dropout(self.ff(self.norm2(x)), self.p, gen)
        return x


class PolymerEncoder(nn.Module):
    """Token ids -> contextual embeddings -> pooled h -> projected z."""

    def __init__(self, config: EncoderConfig):
        super().__init__()
        self.config = config
        self.tok_embed = nn.Embedding(config.vocab_size, config.d_model)
        self.pos_embed = nn.Embedding(config.max_len, config.d_model)
        self.blocks = nn.ModuleList(_Block(config) for _ in range(config.n_layers))
        self.final_norm = nn.LayerNorm(config.d_model)
        self.projector = nn.Sequential(
            nn.Linear(config.d_model, config.d_model),
            nn.ReLU(),
            nn.Linear(config.d_model, config.projector_out),
        )
        self.double()

    def init_parameters(self, seed: int) -> None:
        """Deterministic initialization: embeddings uniform on
        +-sqrt(3/d_model), linear weights uniform on the +-sqrt(6/(fan_in +
        fan_out)) interval, linear biases zero, layer norms identity."""
        gen = torch.Generator()
        gen.manual_seed(torch_seed(seed))
        with torch.no_grad():
            for module in self.modules():
                if isinstance(module, nn.Embedding):
                    bound = math.sqrt(3.0 / self.config.d_model)
                    module.weight.uniform_(-bound, bound, generator=gen)
                elif isinstance(module, nn.Linear):
                    fan_out, fan_in = module.weight.shape
                    bound = math.sqrt(6.0 / (fan_in + fan_out))
                    module.weight.uniform_(-bound, bound, generator=gen)
                    module.bias.zero_()
                elif isinstance(module, nn.LayerNorm):
                    module.weight.fill_(1.0)
                    module.bias.zero_()

    def contextual(
        self,
        input_ids: torch.Tensor,
        dropout_active: bool = False,
        rng_seed: int = 0,
        pad_mask: torch.Tensor | None = None,
    ) -> torch.Tensor:
        """Per-token embeddings of shape (batch, length, d_model).

        ``pad_mask`` (True at padded positions) defaults to ``input_ids ==
        PAD_ID``; passing it explicitly lets callers pin the mask while
        varying padded-position content, which must not change any unmasked
        output row.
        """
        if input_ids.dim() != 2:
            raise ValueError("input_ids must be (batch, length)")
        if input_ids.shape[1] > self.config.max_len:
            raise SequenceTooLongError(
                f"sequence length {input_ids.shape[1]} exceeds max_len "
                f"{self.config.max_len}"
            )
        low, high = int(input_ids.min()), int(input_ids.max())
        if low < 0 or high >= self.config.vocab_size:
            raise UnknownTokenIdError(
                f"token id {low if low < 0 else high} outside vocabulary of "
                f"size {self.config.vocab_size}"
            )
        gen: torch.Generator | None = None
        if dropout_active and self.config.dropout_ratio > 0.0:
            gen = torch.Generator()
            gen.manual_seed(torch_seed(rng_seed))
        if pad_mask is None:
            pad_mask = input_ids == PAD_ID
        positions = torch.arange(input_ids.shape[1])
        x = self.tok_embed(input_ids) + self.pos_embed(positions)[None, :, :]
        for block in self.blocks:
            x = block(x, pad_mask, gen)
        return self.final_norm(x)

    def forward(
        self,
        input_ids: torch.Tensor,
        dropout_active: bool = False,
        rng_seed: int = 0,
    ) -> tuple[torch.Tensor, torch.Tensor]:
        """Pooled h (batch, d_model) and projected z (batch, projector_out)."""
        h = pool_cls(self.contextual(input_ids, dropout_active, rng_seed))
        return h, self.projector(h)


def pool_cls(contextual: torch.Tensor) -> torch.Tensor:
    """Position-0 readout; works on (length, d) or (batch, length, d)."""
    if contextual.shape[-2] < 1:
        raise ValueError("cannot pool an empty sequence")
    return contextual[..., 0, :]


def to_input_ids(
    seqs: list[TokenSequence], vocab: Vocabulary, max_len: int
) -> torch.Tensor:
    """[CLS] seq [SEP] padded to exactly ``max_len``, as a long tensor."""
    rows = []
    for seq in seqs:
        if len(seq) + 2 > max_len:
            raise SequenceTooLongError(
                f"{len(seq)} tokens plus [CLS]/[SEP] exceed max_len {max_len}"
            )
        ids = vocab.encode((CLS,) + tuple(seq) + (SEP,))
        rows.append(ids + [PAD_ID] * (max_len - len(ids)))
    return torch.tensor(rows, dtype=torch.long)


def forward_pair(
    encoder: PolymerEncoder,
    pair: PositivePair,
    spec: AugmentationSpec,
    vocab: Vocabulary,
) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor, torch.Tensor]:
    """(h_i, h_j, z_i, z_j) for one positive pair.

    Each branch gets an independent dropout seed derived from the pair's own
    view seed, active only when the spec enables implicit dropout.
    """
    ids_i = to_input_ids([pair.view_i], vocab, encoder.config.max_len)
    ids_j = to_input_ids([pair.view_j], vocab, encoder.config.max_len)
    act = spec.implicit_dropout
    h_i, z_i = encoder(ids_i, act, mix64(pair.seeds[0], TAG_DROPOUT))
    h_j, z_j = encoder(ids_j, act, mix64(pair.seeds[1], TAG_DROPOUT))
    return h_i[0], h_j[0], z_i[0], z_j[0]


def encode_pairs(
    encoder: PolymerEncoder,
    pairs: list[PositivePair],
    spec: AugmentationSpec,
    vocab: Vocabulary,
    rng_seed: int = 0,
) -> tuple[EmbeddingBatch, EmbeddingBatch]:
    """Batched (branch_i, branch_j) embeddings for a list of pairs.

    Dropout uses one derived seed per branch batch; rows stay aligned with
    ``pairs`` so row k of both batches belongs to ``pairs[k]``.
    """
    max_len = encoder.config.max_len
    act = spec.implicit_dropout
    out = []
    for branch, views in (
        (BRANCH_I, [p.view_i for p in pairs]),
        (BRANCH_J, [p.view_j for p in pairs]),
    ):
        ids = to_input_ids(views, vocab, max_len)
        h, z = encoder(ids, act, mix64(rng_seed, TAG_DROPOUT, branch))
        out.append(EmbeddingBatch(h, z, [(p.anchor_id, branch) for p in pairs]))
    return out[0], out[1]


def save_checkpoint(encoder: PolymerEncoder, path: str | Path) -> None:
    """Write the documented binary checkpoint, bit-exact on round-trip."""
    cfg = encoder.config
    blob = bytearray(
        _HEADER.pack(
            CHECKPOINT_MAGIC,
            CHECKPOINT_VERSION,
            cfg.vocab_size,
            cfg.d_model,
            cfg.n_layers,
            cfg.n_heads,
            cfg.d_feedforward,
            cfg.max_len,
            cfg.projector_out,
            cfg.dropout_ratio,
        )
    )
    for _, param in encoder.named_parameters():
        blob += param.detach().numpy().astype("<f8").tobytes()
    blob += struct.pack("<I", zlib.crc32(bytes(blob)))
    Path(path).write_bytes(bytes(blob))


def load_checkpoint(path: str | Path) -> PolymerEncoder:
    """Rebuild an encoder from a checkpoint; any corruption raises
    CheckpointError."""
    blob = Path(path).read_bytes()
    if len(blob) < _HEADER.size + 4:
        raise CheckpointError(f"checkpoint {path} is truncated")
    body, tail = blob[:-4], blob[-4:]
    if struct.unpack("<I", tail)[0] != zlib.crc32(body):
        raise CheckpointError(f"checkpoint {path} fails its checksum")
    fields = _HEADER.unpack_from(body, 0)
    if fields[0] != CHECKPOINT_MAGIC:
        raise CheckpointError(f"checkpoint {path} has wrong magic bytes")
    if fields[1] != CHECKPOINT_VERSION:
        raise CheckpointError(
            f"checkpoint {path} has unsupported version {fields[1]}"
        )
    cfg = EncoderConfig(
        vocab_size=fields[2],
        d_model=fields[3],
        n_layers=fields[4],
        n_heads=fields[5],
        d_feedforward=fields[6],
        max_len=fields[7],
        projector_out=fields[8],
        dropout_ratio=fields[9],
    )
    encoder = PolymerEncoder(cfg)
    offset = _HEADER.size
    with torch.no_grad():
        for name, param in encoder.named_parameters():
            nbytes = param.numel() * 8
            if offset + nbytes > len(body):
                raise CheckpointError(
                    f"checkpoint {path} is too short for parameter {name}"
                )
            values = np.frombuffer(body, dtype="<f8", count=param.numel(), offset=offset)
            param.copy_(torch.from_numpy(values.copy()).view(param.shape))
            offset += nbytes
    if offset != len(body):
        raise CheckpointError(
            f"checkpoint {path} has {len(body) - offset} unexpected trailing bytes"
        )
    return encoder

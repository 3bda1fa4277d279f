"""Contrastive objective and pretraining loop.

The loss is normalized temperature-scaled cross entropy over a batch of N
positive pairs: latents are arranged as 2N rows [i-views; j-views], each
row is an anchor whose positive sits N rows away, the denominator runs over
the other 2N - 1 rows, and the batch loss averages all 2N anchor terms.

The loop is deterministic end to end: corpus shuffling, per-batch
augmentation seeds, and dropout seeds all derive from the config seed via
tagged mix64 splits, and every run with the same inputs produces
byte-identical logs and checkpoints.  Views are rebuilt each epoch with
fresh seeds.  The incomplete final batch of an epoch is dropped, since the
denominator statistics assume a full batch.

Metric snapshots (alignment/uniformity under the enumeration-pair
protocol, on a fixed evaluation subset) are taken every 2% of total steps
over the first 20%, then every 20%; a checkpoint is written at each
snapshot, plus ckpt_final.bin and ckpt_best.bin (parameters right after
the lowest-loss step).
"""

from __future__ import annotations

import copy
import random
from dataclasses import dataclass, field, replace
from pathlib import Path

import torch

from .augmentation import AugmentationSpec, PositivePair, make_pair_batch
from .encoder import EncoderConfig, PolymerEncoder, encode_pairs, save_checkpoint
from .errors import (
    ConfigError,
    DataError,
    NonFiniteLossError,
    NonPositiveTemperatureError,
    ZeroVectorError,
)
from .repr_metrics import evaluate_representation
from .rng import TAG_BATCH, TAG_EVAL, TAG_INIT, TAG_SHUFFLE, mix64
from .serialize import write_csv
from .smiles_core import Vocabulary

_NORM_FLOOR = 1e-12


@dataclass(frozen=True)
class ContrastiveConfig:
    """Objective and optimizer settings.

    The 1e-3 learning rate suits the desk-scale encoder; paper-shape runs
    use 1e-5.  Weight decay defaults to zero.
    """

    temperature: float = 0.05
    batch_size: int = 16
    epochs: int = 10
    learning_rate: float = 1e-3
    max_grad_norm: float = 1.0
    weight_decay: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.temperature <= 0.0:
            raise NonPositiveTemperatureError(
                f"temperature must be positive, got {self.temperature}"
            )
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.learning_rate <= 0.0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.max_grad_norm <= 0.0:
            raise ConfigError(f"max_grad_norm must be positive, got {self.max_grad_norm}")
        if self.weight_decay < 0.0:
            raise ConfigError(f"weight_decay must be >= 0, got {self.weight_decay}")


@dataclass(frozen=True)
class StepRecord:
    step: int
    epoch: int
    loss: float
    alignment: float | None = None
    uniformity: float | None = None


@dataclass
class TrainLog:
    records: list[StepRecord] = field(default_factory=list)
    epoch_means: list[float] = field(default_factory=list)

    @property
    def snapshots(self) -> list[tuple[float, float, float]]:
        """(step fraction, alignment, uniformity) at each snapshot step."""
        total = self.records[-1].step if self.records else 0
        return [
            (r.step / total, r.alignment, r.uniformity)
            for r in self.records
            if r.alignment is not None
        ]

    def to_csv(self, path: str | Path) -> None:
        write_csv(
            path,
            ("step", "epoch", "loss", "alignment", "uniformity"),
            (
                (r.step, r.epoch, r.loss, r.alignment, r.uniformity)
                for r in self.records
            ),
        )


def _nt_xent(z: torch.Tensor, temperature: float) -> torch.Tensor:
    """Differentiable batch loss over 2N latent rows [i-views; j-views]."""
    if temperature <= 0.0:
        raise NonPositiveTemperatureError(
            f"temperature must be positive, got {temperature}"
        )
    if z.dim() != 2 or z.shape[0] == 0 or z.shape[0] % 2 != 0:
        raise ValueError(f"latents must be a (2N, dim) matrix, got {tuple(z.shape)}")
    norms = z.norm(dim=1)
    bad = (norms <= _NORM_FLOOR).nonzero()
    if bad.numel():
        raise ZeroVectorError(
            f"latent row {int(bad[0])} has norm below {_NORM_FLOOR}"
        )
    two_n = z.shape[0]
    sim = (z / norms.unsqueeze(1)) @ (z / norms.unsqueeze(1)).T
    logits = sim / temperature
    logits = logits.masked_fill(
        torch.eye(two_n, dtype=torch.bool), float("-inf")
    )
    idx = torch.arange(two_n)
    positives = logits[idx, (idx + two_n // 2) % two_n]
    return (torch.logsumexp(logits, dim=1) - positives).mean()


def nt_xent_loss(z, temperature: float) -> tuple[float, torch.Tensor]:
    """(scalar loss, analytic gradient with respect to z).

    At N=1 the denominator equals the positive term and the loss is exactly
    zero; the loss is invariant to positive per-row scaling of z.
    """
    zt = torch.as_tensor(z, dtype=torch.float64).clone().requires_grad_(True)
    loss = _nt_xent(zt, temperature)
    (grad,) = torch.autograd.grad(loss, zt)
    return float(loss.detach()), grad


def train_step(
    encoder: PolymerEncoder,
    optimizer: torch.optim.Optimizer,
    batch: list[PositivePair],
    spec: AugmentationSpec,
    vocab: Vocabulary,
    cfg: ContrastiveConfig,
    rng_seed: int,
) -> float:
    """One optimization step: forward both branches, loss on the projected
    latents, backprop, clip the global gradient norm, apply the update."""
    if not batch:
        raise ValueError("train_step needs a non-empty batch")
    batch_i, batch_j = encode_pairs(encoder, batch, spec, vocab, rng_seed)
    loss = _nt_xent(torch.cat((batch_i.z, batch_j.z)), cfg.temperature)
    if not bool(torch.isfinite(loss)):
        raise NonFiniteLossError(f"loss became {float(loss.detach())} on this batch")
    optimizer.zero_grad(set_to_none=True)
    loss.backward()
    torch.nn.utils.clip_grad_norm_(encoder.parameters(), cfg.max_grad_norm)
    optimizer.step()
    return float(loss.detach())


def snapshot_steps(total_steps: int) -> list[int]:
    """Snapshot schedule: every 2% of steps across the first 20%, then
    every 20%, always including the final step."""
    fractions = [k / 50 for k in range(1, 11)] + [0.4, 0.6, 0.8, 1.0]
    return sorted({max(1, round(f * total_steps)) for f in fractions})


def _eval_subset(corpus: list[str], size: int, seed: int) -> list[str]:
    if len(corpus) <= size:
        return list(corpus)
    return random.Random(mix64(seed, TAG_EVAL)).sample(corpus, size)


def pretrain(
    corpus: list[str],
    spec: AugmentationSpec,
    enc_cfg: EncoderConfig,
    cfg: ContrastiveConfig,
    out_dir: str | Path | None = None,
    eval_sample: int = 256,
) -> tuple[PolymerEncoder, Vocabulary, TrainLog, dict[str, Path]]:
    """Full pretraining run over ``corpus``.

    The vocabulary is built from the corpus and ``enc_cfg.vocab_size`` is
    replaced to match it.  With ``out_dir`` set, writes ckpt_{step}.bin at
    every snapshot step, ckpt_final.bin, ckpt_best.bin, train_log.csv, and
    vocab.txt; returns the trained encoder, the vocabulary, the log, and
    the checkpoint paths by name.
    """
    if not corpus:
        raise DataError("pretraining corpus is empty")
    vocab = Vocabulary.from_corpus(corpus)
    enc_cfg = replace(enc_cfg, vocab_size=len(vocab))
    encoder = PolymerEncoder(enc_cfg)
    encoder.init_parameters(mix64(cfg.seed, TAG_INIT))
    optimizer = torch.optim.AdamW(
        encoder.parameters(), lr=cfg.learning_rate, weight_decay=cfg.weight_decay
    )
    steps_per_epoch = len(corpus) // cfg.batch_size
    if steps_per_epoch == 0:
        raise ConfigError(
            f"batch_size {cfg.batch_size} exceeds corpus size {len(corpus)}"
        )
    total_steps = steps_per_epoch * cfg.epochs
    snaps = set(snapshot_steps(total_steps))
    eval_corpus = _eval_subset(corpus, eval_sample, cfg.seed)
    eval_seed = mix64(cfg.seed, TAG_EVAL)

    out_path = Path(out_dir) if out_dir is not None else None
    if out_path is not None:
        out_path.mkdir(parents=True, exist_ok=True)
        vocab.save(out_path / "vocab.txt")

    log = TrainLog()
    checkpoints: dict[str, Path] = {}
    best_loss = float("inf")
    best_state: dict | None = None
    step = 0
    for epoch in range(1, cfg.epochs + 1):
        order = list(range(len(corpus)))
        random.Random(mix64(cfg.seed, TAG_SHUFFLE, epoch)).shuffle(order)
        epoch_losses: list[float] = []
        for b in range(steps_per_epoch):
            step += 1
            anchors = [corpus[i] for i in order[b * cfg.batch_size:(b + 1) * cfg.batch_size]]
            batch_seed = mix64(cfg.seed, TAG_BATCH, epoch, b)
            batch = make_pair_batch(anchors, spec, batch_seed)
            loss = train_step(encoder, optimizer, batch, spec, vocab, cfg, batch_seed)
            epoch_losses.append(loss)
            alignment = uniformity = None
            if step in snaps:
                alignment, uniformity = evaluate_representation(
                    eval_corpus, encoder, vocab, eval_seed
                )
                if out_path is not None:
                    ckpt = out_path / f"ckpt_{step}.bin"
                    save_checkpoint(encoder, ckpt)
                    checkpoints[f"step_{step}"] = ckpt
            if loss < best_loss:
                best_loss = loss
                best_state = copy.deepcopy(encoder.state_dict())
            log.records.append(StepRecord(step, epoch, loss, alignment, uniformity))
        log.epoch_means.append(sum(epoch_losses) / len(epoch_losses))
    if out_path is not None:
        final = out_path / "ckpt_final.bin"
        save_checkpoint(encoder, final)
        checkpoints["final"] = final
        assert best_state is not None
        best_encoder = PolymerEncoder(enc_cfg)
        best_encoder.load_state_dict(best_state)
        best = out_path / "ckpt_best.bin"
        save_checkpoint(best_encoder, best)
        checkpoints["best"] = best
        log.to_csv(out_path / "train_log.csv")
    return encoder, vocab, log, checkpoints

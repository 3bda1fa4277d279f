"""Frozen-encoder transfer learning: feature extraction, regression head,
early stopping, and 5-fold cross-validation with RMSE and R-squared.

The encoder is strictly read-only here; a parameter checksum taken before
and after every cross-validation run enforces that.  The regression head is
a single-hidden-layer MLP (hidden width = feature dimension, rectified
linear, dropout 0.1 during training) trained with an l2 loss and AdamW at
learning rate 1e-3, no weight decay, for up to 500 epochs.  Targets are
z-scored on the training fold and predictions un-standardized before
metrics.  Validation RMSE is monitored with early stopping that activates
at epoch 50 with patience 50, so a run whose validation RMSE only worsens
from epoch 50 stops at epoch 100 and keeps the epoch-50 parameters.
"""

from __future__ import annotations

import copy
import math
import random
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from torch import nn

from .encoder import PolymerEncoder, to_input_ids
from .errors import (
    ConfigError,
    ConstantTargetError,
    DataError,
    DatasetTooSmallError,
    NonFiniteLossError,
    PolyclError,
)
from .rng import TAG_DROPOUT, TAG_FOLD, TAG_INIT, TAG_SHUFFLE, mix64, torch_seed
from .smiles_core import Vocabulary, tokenize

_FEATURE_CHUNK = 1024


@dataclass(frozen=True)
class PropertyDataset:
    """Named downstream regression dataset of (smiles, value) records."""

    records: tuple[tuple[str, float], ...]
    name: str = "dataset"

    def __post_init__(self) -> None:
        object.__setattr__(self, "records", tuple(tuple(r) for r in self.records))
        for i, (smiles, value) in enumerate(self.records):
            if not isinstance(smiles, str) or not smiles:
                raise DataError(f"record {i}: empty smiles")
            if not math.isfinite(value):
                raise DataError(f"record {i}: non-finite value {value}")

    def __len__(self) -> int:
        return len(self.records)

    @property
    def smiles(self) -> list[str]:
        return [s for s, _ in self.records]

    @property
    def values(self) -> np.ndarray:
        return np.array([v for _, v in self.records], dtype=np.float64)


@dataclass(frozen=True)
class FoldReport:
    fold_index: int
    rmse: float
    r2: float
    best_epoch: int

    def __post_init__(self) -> None:
        if self.rmse < 0.0 or self.r2 > 1.0 + 1e-12:
            raise ValueError(f"impossible fold metrics rmse={self.rmse} r2={self.r2}")


@dataclass(frozen=True)
class HeadConfig:
    """Regression-head training settings; ``hidden_dim=None`` means the
    hidden layer is as wide as the input features."""

    hidden_dim: int | None = None
    dropout_ratio: float = 0.1
    learning_rate: float = 1e-3
    weight_decay: float = 0.0
    epochs: int = 500
    activation_epoch: int = 50
    patience: int = 50
    full_batch_limit: int = 4096
    minibatch_size: int = 256

    def __post_init__(self) -> None:
        if self.epochs < 1 or self.patience < 1 or self.activation_epoch < 0:
            raise ValueError("epochs and patience must be positive")
        if self.learning_rate <= 0 or not 0.0 <= self.dropout_ratio < 1.0:
            raise ValueError("bad learning_rate or dropout_ratio")


def load_property_csv(path: str | Path, name: str | None = None) -> PropertyDataset:
    """Read a dataset CSV with mandatory header ``smiles,value``.

    Every diagnostic cites the 1-based line number.  SMILES parseability is
    checked downstream at feature extraction, where row indices are known.
    """
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or lines[0].strip() != "smiles,value":
        # wrong file format, not bad data: a usage error
        raise ConfigError(f"{path}:1: expected header 'smiles,value'")
    records: list[tuple[str, float]] = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise DataError(f"{path}:{lineno}: expected 'smiles,value', got {line!r}")
        try:
            value = float(parts[1])
        except ValueError:
            raise DataError(f"{path}:{lineno}: non-numeric value {parts[1]!r}") from None
        if not math.isfinite(value):
            raise DataError(f"{path}:{lineno}: non-finite value {parts[1]!r}")
        records.append((parts[0], value))
    if not records:
        raise DataError(f"{path}: no data rows")
    return PropertyDataset(tuple(records), name or path.stem)


def rmse(y, yhat) -> float:
    y, yhat = np.asarray(y, dtype=np.float64), np.asarray(yhat, dtype=np.float64)
    if y.shape != yhat.shape or y.ndim != 1 or y.shape[0] < 2:
        raise ValueError("rmse needs two equal-length vectors of >= 2 entries")
    return float(np.sqrt(np.mean((y - yhat) ** 2)))


def r_squared(y, yhat) -> float:
    y, yhat = np.asarray(y, dtype=np.float64), np.asarray(yhat, dtype=np.float64)
    if y.shape != yhat.shape or y.ndim != 1 or y.shape[0] < 2:
        raise ValueError("r_squared needs two equal-length vectors of >= 2 entries")
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        raise ConstantTargetError("R-squared is undefined for a constant target")
    return 1.0 - float(np.sum((y - yhat) ** 2)) / ss_tot


def extract_features(
    smiles: list[str], encoder: PolymerEncoder, vocab: Vocabulary
) -> torch.Tensor:
    """Pooled h per input row, dropout off, parameters untouched.

    Rows are processed in fixed chunks so the output is independent of how
    callers split their inputs.
    """
    seqs = []
    for i, text in enumerate(smiles):
        try:
            seqs.append(tokenize(text))
        except PolyclError as exc:
            exc.args = (f"row {i}: {exc.args[0]}",) + exc.args[1:]
            raise
    chunks = []
    with torch.no_grad():
        for start in range(0, len(seqs), _FEATURE_CHUNK):
            ids = to_input_ids(
                seqs[start:start + _FEATURE_CHUNK], vocab, encoder.config.max_len
            )
            h, _ = encoder(ids)
            chunks.append(h)
    return torch.cat(chunks) if chunks else torch.zeros((0, encoder.config.d_model))


@dataclass
class EarlyStopping:
    """Strict-improvement monitor; ``update`` returns True when training
    should stop (only at or past the activation epoch)."""

    activation_epoch: int = 50
    patience: int = 50
    best_value: float = math.inf
    best_epoch: int = 0

    def update(self, epoch: int, value: float) -> bool:
        if value < self.best_value:
            self.best_value = value
            self.best_epoch = epoch
        return (
            epoch >= self.activation_epoch
            and epoch - self.best_epoch >= self.patience
        )


class RegressionHead(nn.Module):
    """features -> hidden (rectified linear, dropout while training) -> 1."""

    def __init__(self, in_dim: int, cfg: HeadConfig):
        super().__init__()
        hidden = cfg.hidden_dim if cfg.hidden_dim is not None else in_dim
        self.dropout_ratio = cfg.dropout_ratio
        self.hidden = nn.Linear(in_dim, hidden)
        self.out = nn.Linear(hidden, 1)
        self.double()

    def init_parameters(self, seed: int) -> None:
        gen = torch.Generator()
        gen.manual_seed(torch_seed(seed))
        with torch.no_grad():
            for layer in (self.hidden, self.out):
                fan_out, fan_in = layer.weight.shape
                bound = math.sqrt(6.0 / (fan_in + fan_out))
                layer.weight.uniform_(-bound, bound, generator=gen)
                layer.bias.zero_()

    def forward(
        self, x: torch.Tensor, dropout_seed: int | None = None
    ) -> torch.Tensor:
        a = torch.relu(self.hidden(x))
        if dropout_seed is not None and self.dropout_ratio > 0.0:
            gen = torch.Generator()
            gen.manual_seed(torch_seed(dropout_seed))
            keep = (
                torch.rand(a.shape, generator=gen, dtype=a.dtype) >= self.dropout_ratio
            ).to(a.dtype)
            a = a * keep / (1.0 - self.dropout_ratio)
        return self.out(a).squeeze(-1)


def _standardizer(train_y: torch.Tensor) -> tuple[float, float]:
    mu = float(train_y.mean())
    sigma = float(train_y.std(unbiased=False))
    if sigma == 0.0 or not math.isfinite(sigma):
        raise ConstantTargetError("training-fold targets are constant")
    return mu, sigma


def train_head(
    train: tuple[torch.Tensor, torch.Tensor],
    val: tuple[torch.Tensor, torch.Tensor],
    cfg: HeadConfig,
    rng_seed: int,
    fold_index: int = 0,
) -> tuple[RegressionHead, FoldReport]:
    """Train a head on z-scored targets; return the best-validation-epoch
    parameters and that epoch's validation metrics."""
    x_train, y_train = train
    x_val, y_val = val
    mu, sigma = _standardizer(y_train)
    y_std = (y_train - mu) / sigma

    head = RegressionHead(x_train.shape[1], cfg)
    head.init_parameters(mix64(rng_seed, TAG_INIT))
    optimizer = torch.optim.AdamW(
        head.parameters(), lr=cfg.learning_rate, weight_decay=cfg.weight_decay
    )
    monitor = EarlyStopping(cfg.activation_epoch, cfg.patience)
    best_state: dict | None = None
    n = x_train.shape[0]
    full_batch = n <= cfg.full_batch_limit

    for epoch in range(1, cfg.epochs + 1):
        if full_batch:
            batches = [torch.arange(n)]
        else:
            order = list(range(n))
            random.Random(mix64(rng_seed, TAG_SHUFFLE, epoch)).shuffle(order)
            batches = [
                torch.tensor(order[s:s + cfg.minibatch_size], dtype=torch.long)
                for s in range(0, n, cfg.minibatch_size)
            ]
        for b, idx in enumerate(batches):
            preds = head(x_train[idx], mix64(rng_seed, TAG_DROPOUT, epoch, b))
            loss = torch.mean((preds - y_std[idx]) ** 2)
            if not bool(torch.isfinite(loss)):
                raise NonFiniteLossError(
                    f"head loss became {float(loss)} at epoch {epoch}"
                )
            optimizer.zero_grad(set_to_none=True)
            loss.backward()
            optimizer.step()
        with torch.no_grad():
            val_pred = head(x_val) * sigma + mu
        val_rmse = rmse(y_val.numpy(), val_pred.numpy())
        if val_rmse < monitor.best_value:
            best_state = copy.deepcopy(head.state_dict())
        if monitor.update(epoch, val_rmse):
            break

    assert best_state is not None
    head.load_state_dict(best_state)
    with torch.no_grad():
        val_pred = head(x_val) * sigma + mu
    report = FoldReport(
        fold_index=fold_index,
        rmse=rmse(y_val.numpy(), val_pred.numpy()),
        r2=r_squared(y_val.numpy(), val_pred.numpy()),
        best_epoch=monitor.best_epoch,
    )
    return head, report


def make_folds(n: int, n_folds: int, seed: int) -> list[list[int]]:
    """Seed-shuffled disjoint cover of range(n) with sizes differing by
    at most one."""
    order = list(range(n))
    random.Random(mix64(seed, TAG_FOLD)).shuffle(order)
    base, extra = divmod(n, n_folds)
    folds, start = [], 0
    for k in range(n_folds):
        size = base + (1 if k < extra else 0)
        folds.append(order[start:start + size])
        start += size
    return folds


def _param_checksum(module: nn.Module) -> int:
    crc = 0
    for _, p in module.named_parameters():
        crc = zlib.crc32(p.detach().numpy().astype("<f8").tobytes(), crc)
    return crc


def cross_validate(
    ds: PropertyDataset,
    encoder: PolymerEncoder,
    vocab: Vocabulary,
    head_cfg: HeadConfig,
    seed: int,
    n_folds: int = 5,
) -> tuple[list[FoldReport], float]:
    """5-fold cross-validation of a frozen encoder on ``ds``; returns the
    per-fold reports and the mean R-squared."""
    if len(ds) < 2 * n_folds:
        raise DatasetTooSmallError(
            f"{ds.name}: {len(ds)} records is too few for {n_folds}-fold "
            f"cross-validation (need at least {2 * n_folds})"
        )
    checksum_before = _param_checksum(encoder)
    features = extract_features(ds.smiles, encoder, vocab)
    targets = torch.from_numpy(ds.values)
    reports: list[FoldReport] = []
    for k, fold in enumerate(make_folds(len(ds), n_folds, seed)):
        val_idx = torch.tensor(sorted(fold), dtype=torch.long)
        train_mask = torch.ones(len(ds), dtype=torch.bool)
        train_mask[val_idx] = False
        train_idx = train_mask.nonzero().squeeze(1)
        _, report = train_head(
            (features[train_idx], targets[train_idx]),
            (features[val_idx], targets[val_idx]),
            head_cfg,
            mix64(seed, TAG_FOLD, k),
            fold_index=k,
        )
        reports.append(report)
    if _param_checksum(encoder) != checksum_before:
        raise RuntimeError("encoder parameters changed during transfer run")
    return reports, float(np.mean([r.r2 for r in reports]))

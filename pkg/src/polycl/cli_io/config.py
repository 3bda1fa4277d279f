"""Run configuration: strict JSON loading plus a reproducibility fingerprint.

A run config is a JSON object with optional sections ``encoder``,
``contrastive``, ``augmentation``, ``transfer``, ``paths`` and a mandatory
top-level ``seed``.  Unknown keys anywhere are rejected with their dotted
key path; referenced input paths must exist at validation time.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from ..augmentation import AugmentationSpec, ExplicitMode
from ..encoder import EncoderConfig
from ..errors import ConfigError, PolyclError
from ..pretrain import ContrastiveConfig
from ..transfer_eval import HeadConfig

_TOP_KEYS = ("encoder", "contrastive", "augmentation", "transfer", "paths", "seed")
_ENCODER_KEYS = (
    "d_model",
    "n_layers",
    "n_heads",
    "d_feedforward",
    "max_len",
    "dropout_ratio",
    "projector_out",
)
_CONTRASTIVE_KEYS = (
    "temperature",
    "batch_size",
    "epochs",
    "learning_rate",
    "max_grad_norm",
    "weight_decay",
)
_AUGMENTATION_KEYS = ("branch_i", "branch_j", "implicit", "ratio")
_TRANSFER_KEYS = (
    "hidden_dim",
    "dropout_ratio",
    "learning_rate",
    "weight_decay",
    "epochs",
    "activation_epoch",
    "patience",
    "full_batch_limit",
    "minibatch_size",
    "n_folds",
)
_PATH_KEYS = ("corpus", "datasets", "output_dir")

FINGERPRINT_NAME = "config_fingerprint.json"


@dataclass(frozen=True)
class RunConfig:
    """Validated settings for one CLI run.

    ``encoder_args`` omits ``vocab_size``, which is only known once the
    corpus has been read; ``resolved`` is the fully materialized config
    dict (defaults filled in, overrides applied) used for fingerprinting.
    """

    seed: int
    encoder_args: dict[str, Any]
    contrastive: ContrastiveConfig
    augmentation: AugmentationSpec
    head: HeadConfig
    n_folds: int
    corpus: Path | None
    datasets: tuple[Path, ...]
    output_dir: Path | None
    resolved: dict[str, Any] = field(repr=False)

    def encoder_config(self, vocab_size: int) -> EncoderConfig:
        return EncoderConfig(vocab_size=vocab_size, **self.encoder_args)


def _reject_unknown(section: dict, allowed: tuple[str, ...], prefix: str) -> None:
    for key in section:
        if key not in allowed:
            raise ConfigError(f"{prefix}{key}: unknown key")


def _expect_mapping(value: Any, path: str) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(f"{path}: expected an object, got {type(value).__name__}")
    return value


def _expect_int(value: Any, path: str) -> int:
    # bool is an int subclass; reject it explicitly
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{path}: expected an integer, got {value!r}")
    return value


def _expect_number(value: Any, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {value!r}")
    return float(value)


def _expect_bool(value: Any, path: str) -> bool:
    if not isinstance(value, bool):
        raise ConfigError(f"{path}: expected a boolean, got {value!r}")
    return value


def _expect_str(value: Any, path: str) -> str:
    if not isinstance(value, str):
        raise ConfigError(f"{path}: expected a string, got {value!r}")
    return value


def parse_mode(value: Any, path: str) -> ExplicitMode:
    text = _expect_str(value, path)
    try:
        return ExplicitMode(text)
    except ValueError:
        names = "|".join(m.value for m in ExplicitMode)
        raise ConfigError(f"{path}: unknown mode {text!r} (expected {names})") from None


def _build_encoder_args(section: dict) -> dict[str, Any]:
    _reject_unknown(section, _ENCODER_KEYS, "encoder.")
    args: dict[str, Any] = {}
    for key in ("d_model", "n_layers", "n_heads", "d_feedforward", "max_len",
                "projector_out"):
        if key in section:
            args[key] = _expect_int(section[key], f"encoder.{key}")
    if "dropout_ratio" in section:
        args["dropout_ratio"] = _expect_number(section["dropout_ratio"],
                                               "encoder.dropout_ratio")
    try:
        EncoderConfig(vocab_size=1, **args)  # value validation only
    except ValueError as exc:
        raise ConfigError(f"encoder: {exc}") from None
    return args


def _build_contrastive(section: dict, seed: int) -> ContrastiveConfig:
    _reject_unknown(section, _CONTRASTIVE_KEYS, "contrastive.")
    args: dict[str, Any] = {}
    for key in ("batch_size", "epochs"):
        if key in section:
            args[key] = _expect_int(section[key], f"contrastive.{key}")
    for key in ("temperature", "learning_rate", "max_grad_norm", "weight_decay"):
        if key in section:
            args[key] = _expect_number(section[key], f"contrastive.{key}")
    try:
        return ContrastiveConfig(seed=seed, **args)
    except PolyclError as exc:
        raise type(exc)(f"contrastive: {exc}") from None


def _build_augmentation(section: dict) -> AugmentationSpec:
    _reject_unknown(section, _AUGMENTATION_KEYS, "augmentation.")
    args: dict[str, Any] = {}
    if "branch_i" in section:
        args["branch_i"] = parse_mode(section["branch_i"], "augmentation.branch_i")
    if "branch_j" in section:
        args["branch_j"] = parse_mode(section["branch_j"], "augmentation.branch_j")
    if "implicit" in section:
        args["implicit_dropout"] = _expect_bool(section["implicit"],
                                                "augmentation.implicit")
    if "ratio" in section:
        args["ratio"] = _expect_number(section["ratio"], "augmentation.ratio")
    try:
        return AugmentationSpec(**args)
    except PolyclError as exc:
        raise type(exc)(f"augmentation: {exc}") from None


def _build_transfer(section: dict) -> tuple[HeadConfig, int]:
    _reject_unknown(section, _TRANSFER_KEYS, "transfer.")
    n_folds = 5
    if "n_folds" in section:
        n_folds = _expect_int(section["n_folds"], "transfer.n_folds")
        if n_folds < 2:
            raise ConfigError(f"transfer.n_folds: must be >= 2, got {n_folds}")
    args: dict[str, Any] = {}
    if "hidden_dim" in section and section["hidden_dim"] is not None:
        args["hidden_dim"] = _expect_int(section["hidden_dim"], "transfer.hidden_dim")
    for key in ("epochs", "activation_epoch", "patience", "full_batch_limit",
                "minibatch_size"):
        if key in section:
            args[key] = _expect_int(section[key], f"transfer.{key}")
    for key in ("dropout_ratio", "learning_rate", "weight_decay"):
        if key in section:
            args[key] = _expect_number(section[key], f"transfer.{key}")
    try:
        return HeadConfig(**args), n_folds
    except ValueError as exc:
        raise ConfigError(f"transfer: {exc}") from None


def _build_paths(section: dict, config_dir: Path) -> tuple[Path | None, tuple[Path, ...], Path | None]:
    _reject_unknown(section, _PATH_KEYS, "paths.")

    def resolve(text: str) -> Path:
        # relative paths are taken relative to the config file
        p = Path(text)
        return p if p.is_absolute() else config_dir / p

    corpus = None
    if "corpus" in section:
        corpus = resolve(_expect_str(section["corpus"], "paths.corpus"))
        if not corpus.is_file():
            raise ConfigError(f"paths.corpus: file not found: {corpus}")
    datasets: list[Path] = []
    if "datasets" in section:
        raw = section["datasets"]
        if not isinstance(raw, list):
            raise ConfigError("paths.datasets: expected a list of file paths")
        for i, item in enumerate(raw):
            p = resolve(_expect_str(item, f"paths.datasets[{i}]"))
            if not p.is_file():
                raise ConfigError(f"paths.datasets[{i}]: file not found: {p}")
            datasets.append(p)
    output_dir = None
    if "output_dir" in section:
        output_dir = resolve(_expect_str(section["output_dir"], "paths.output_dir"))
    return corpus, tuple(datasets), output_dir


def load_run_config(
    path: str | Path,
    seed_override: int | None = None,
    out_dir_override: str | Path | None = None,
) -> RunConfig:
    """Load and validate a JSON run config.

    ``seed_override`` and ``out_dir_override`` come from the command line
    and take precedence over the file; the seed is otherwise mandatory.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    raw = _expect_mapping(raw, str(path))
    _reject_unknown(raw, _TOP_KEYS, "")

    if seed_override is not None:
        seed = seed_override
    elif "seed" in raw:
        seed = _expect_int(raw["seed"], "seed")
    else:
        raise ConfigError(f"{path}: 'seed' is mandatory (or pass --seed)")

    encoder_args = _build_encoder_args(_expect_mapping(raw.get("encoder", {}), "encoder"))
    contrastive = _build_contrastive(
        _expect_mapping(raw.get("contrastive", {}), "contrastive"), seed
    )
    augmentation = _build_augmentation(
        _expect_mapping(raw.get("augmentation", {}), "augmentation")
    )
    head, n_folds = _build_transfer(_expect_mapping(raw.get("transfer", {}), "transfer"))
    corpus, datasets, output_dir = _build_paths(
        _expect_mapping(raw.get("paths", {}), "paths"), path.parent
    )
    if out_dir_override is not None:
        output_dir = Path(out_dir_override)

    resolved = _resolve_dict(seed, encoder_args, contrastive, augmentation,
                             head, n_folds, corpus, datasets, output_dir)
    return RunConfig(
        seed=seed,
        encoder_args=encoder_args,
        contrastive=contrastive,
        augmentation=augmentation,
        head=head,
        n_folds=n_folds,
        corpus=corpus,
        datasets=datasets,
        output_dir=output_dir,
        resolved=resolved,
    )


def _resolve_dict(
    seed: int,
    encoder_args: dict[str, Any],
    contrastive: ContrastiveConfig,
    augmentation: AugmentationSpec,
    head: HeadConfig,
    n_folds: int,
    corpus: Path | None,
    datasets: tuple[Path, ...],
    output_dir: Path | None,
) -> dict[str, Any]:
    """Fully materialized config with every default filled in.

    Output paths are excluded so the fingerprint identifies the experiment,
    not where its artifacts happen to land.
    """
    probe = EncoderConfig(vocab_size=1, **encoder_args)
    return {
        "seed": seed,
        "encoder": {
            "d_model": probe.d_model,
            "n_layers": probe.n_layers,
            "n_heads": probe.n_heads,
            "d_feedforward": probe.d_feedforward,
            "max_len": probe.max_len,
            "dropout_ratio": probe.dropout_ratio,
            "projector_out": probe.projector_out,
        },
        "contrastive": {
            "temperature": contrastive.temperature,
            "batch_size": contrastive.batch_size,
            "epochs": contrastive.epochs,
            "learning_rate": contrastive.learning_rate,
            "max_grad_norm": contrastive.max_grad_norm,
            "weight_decay": contrastive.weight_decay,
        },
        "augmentation": {
            "branch_i": augmentation.branch_i.value,
            "branch_j": augmentation.branch_j.value,
            "implicit": augmentation.implicit_dropout,
            "ratio": augmentation.ratio,
        },
        "transfer": {
            "hidden_dim": head.hidden_dim,
            "dropout_ratio": head.dropout_ratio,
            "learning_rate": head.learning_rate,
            "weight_decay": head.weight_decay,
            "epochs": head.epochs,
            "activation_epoch": head.activation_epoch,
            "patience": head.patience,
            "full_batch_limit": head.full_batch_limit,
            "minibatch_size": head.minibatch_size,
            "n_folds": n_folds,
        },
        "paths": {
            "corpus": str(corpus) if corpus else None,
            "datasets": [str(p) for p in datasets],
        },
    }


def fingerprint(resolved: dict[str, Any]) -> str:
    """SHA-256 over the canonical (sorted-key, compact) JSON encoding."""
    canonical = json.dumps(resolved, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def write_fingerprint(resolved: dict[str, Any], out_dir: str | Path) -> Path:
    """Record the resolved config and its hash next to the run's artifacts."""
    target = Path(out_dir) / FINGERPRINT_NAME
    payload = {"sha256": fingerprint(resolved), "config": resolved}
    target.write_text(
        json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    return target

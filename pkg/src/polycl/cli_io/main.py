"""Command-line surface.

Commands: pretrain, sweep, embed, eval-repr, transfer, augment.  Every
command is a pure function of (config file, input files, seed) to output
bytes; logs go to stderr and are controlled by the POLYCL_LOG env var.
Exit codes: 0 success, 2 usage/config error, 3 data/checkpoint error,
4 numeric failure.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import logging
import os
import sys
from pathlib import Path

from ..augmentation import AugmentationSpec, ExplicitMode, make_pair_batch
from ..errors import ConfigError, DataError, PolyclError
from ..pretrain import ContrastiveConfig, pretrain
from ..repr_metrics import evaluate_representation
from ..rng import TAG_BATCH, mix64
from ..serialize import write_csv
from ..smiles_core import Vocabulary, detokenize, parse
from ..transfer_eval import HeadConfig, cross_validate, load_property_csv
from ..encoder import PolymerEncoder, load_checkpoint
from ..transfer_eval import extract_features
from .config import (
    RunConfig,
    load_run_config,
    parse_mode,
    write_fingerprint,
)

log = logging.getLogger("polycl")

SWEEP_TABLE_NAME = "sweep_grid.csv"


def _setup_logging() -> None:
    level_name = os.environ.get("POLYCL_LOG", "WARNING").upper()
    level = getattr(logging, level_name, None)
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(
        level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr
    )


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polycl",
        description="Contrastive pretraining and evaluation for polymer "
        "sequence representations.",
    )
    parser.add_argument("--config", help="JSON run config")
    parser.add_argument("--seed", type=int, help="override the config seed")
    parser.add_argument("--out-dir", help="override the config output directory")
    parser.add_argument("--workers", type=int, default=1,
                        help="worker processes for sweep cells")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("pretrain", help="contrastive pretraining from a run config")

    p = sub.add_parser("sweep", help="pretrain per augmentation combination, "
                                     "then transfer-evaluate each")
    p.add_argument("--grid", help="JSON file with a list of augmentation specs "
                                  "(default: all pairwise combinations plus "
                                  "implicit-only)")

    p = sub.add_parser("embed", help="export pooled embeddings as CSV")
    p.add_argument("checkpoint")
    p.add_argument("corpus")
    p.add_argument("output")
    p.add_argument("--vocab", help="vocabulary file (default: vocab.txt next "
                                   "to the checkpoint)")

    p = sub.add_parser("eval-repr", help="alignment/uniformity per checkpoint")
    p.add_argument("checkpoints", nargs="+")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--vocab")

    p = sub.add_parser("transfer", help="frozen-encoder cross-validated "
                                        "regression on a property dataset")
    p.add_argument("checkpoint")
    p.add_argument("dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--vocab")
    p.add_argument("--name", help="dataset tag for the report (default: "
                                  "file stem)")

    p = sub.add_parser("augment", help="dump augmented view pairs per input "
                                       "for inspection")
    p.add_argument("corpus")
    p.add_argument("output")
    p.add_argument("--branch-i", default="Enumeration")
    p.add_argument("--branch-j", default="Masking")
    p.add_argument("--no-implicit", action="store_true")
    p.add_argument("--ratio", type=float, default=0.10)
    p.add_argument("--views", type=int, default=1,
                   help="view pairs per input molecule")
    return parser


def _load_corpus(path: str | Path) -> list[str]:
    """Corpus lines, comment/blank lines skipped, every molecule parsed.

    Parse failures are re-raised with the file name and 1-based line number
    attached.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"corpus file not found: {path}")
    entries: list[tuple[int, str]] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.rstrip("\n")
            if not text or text.startswith("#"):
                continue
            entries.append((lineno, text))
    if not entries:
        raise DataError(f"{path}: corpus has no molecules")
    for lineno, text in entries:
        try:
            parse(text)
        except PolyclError as exc:
            exc.args = (f"{path}:{lineno}: {exc.args[0]}",) + exc.args[1:]
            raise
    return [text for _, text in entries]


def _load_encoder(path: str | Path) -> PolymerEncoder:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"checkpoint not found: {path}")
    return load_checkpoint(path)


def _load_vocab_for(
    checkpoint: str | Path, vocab_arg: str | None, encoder: PolymerEncoder
) -> Vocabulary:
    """The vocabulary a checkpoint was trained with.

    Defaults to vocab.txt beside the checkpoint; the token count must match
    the checkpoint's embedding table.
    """
    path = Path(vocab_arg) if vocab_arg else Path(checkpoint).parent / "vocab.txt"
    if not path.is_file():
        raise DataError(f"vocabulary file not found: {path} (pass --vocab)")
    vocab = Vocabulary.load(path)
    if len(vocab) != encoder.config.vocab_size:
        raise DataError(
            f"{path}: {len(vocab)} tokens does not match the checkpoint's "
            f"vocab_size {encoder.config.vocab_size}"
        )
    return vocab


def _require(value, message: str):
    if value is None:
        raise ConfigError(message)
    return value


def _load_config_for(args) -> RunConfig:
    path = _require(args.config, f"{args.command} requires --config")
    return load_run_config(path, seed_override=args.seed,
                           out_dir_override=args.out_dir)


def cmd_pretrain(run_cfg: RunConfig) -> int:
    corpus_path = _require(run_cfg.corpus, "paths.corpus: required for pretrain")
    out_dir = _require(run_cfg.output_dir,
                       "paths.output_dir: required for pretrain (or pass --out-dir)")
    corpus = _load_corpus(corpus_path)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_fingerprint(run_cfg.resolved, out_dir)
    log.info("pretraining on %d molecules, spec %s", len(corpus),
             run_cfg.augmentation.label())
    pretrain(
        corpus,
        run_cfg.augmentation,
        run_cfg.encoder_config(vocab_size=1),  # replaced once the vocab is built
        run_cfg.contrastive,
        out_dir=out_dir,
    )
    return 0


def default_grid(ratio: float) -> list[AugmentationSpec]:
    """All unordered explicit-mode pairs (10, baseline included) plus the
    implicit-dropout-only spec."""
    modes = list(ExplicitMode)
    specs = [
        AugmentationSpec(modes[a], modes[b], implicit_dropout=False, ratio=ratio)
        for a in range(len(modes))
        for b in range(a, len(modes))
    ]
    specs.append(
        AugmentationSpec(ExplicitMode.ORIGINAL, ExplicitMode.ORIGINAL,
                         implicit_dropout=True, ratio=ratio)
    )
    return specs


def _load_grid(path: str | Path, default_ratio: float) -> list[AugmentationSpec]:
    import json

    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"grid file not found: {path}")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(raw, list):
        raise ConfigError(f"{path}: expected a JSON list of augmentation specs")
    specs: list[AugmentationSpec] = []
    for i, item in enumerate(raw):
        if not isinstance(item, dict):
            raise ConfigError(f"{path}: grid[{i}]: expected an object")
        allowed = {"branch_i", "branch_j", "implicit", "ratio"}
        for key in item:
            if key not in allowed:
                raise ConfigError(f"{path}: grid[{i}].{key}: unknown key")
        try:
            specs.append(AugmentationSpec(
                branch_i=parse_mode(item.get("branch_i", "Original"),
                                    f"grid[{i}].branch_i"),
                branch_j=parse_mode(item.get("branch_j", "Original"),
                                    f"grid[{i}].branch_j"),
                implicit_dropout=bool(item.get("implicit", False)),
                ratio=float(item.get("ratio", default_ratio)),
            ))
        except PolyclError as exc:
            raise type(exc)(f"{path}: grid[{i}]: {exc}") from None
    return specs


def _sweep_cell(
    spec: AugmentationSpec,
    corpus: list[str],
    encoder_args: dict,
    contrastive: ContrastiveConfig,
    head: HeadConfig,
    n_folds: int,
    dataset_paths: list[Path],
    cell_dir: Path,
    seed: int,
) -> list[tuple[str, float | None, str, int]]:
    """One grid cell: pretrain under ``spec``, then transfer-evaluate every
    dataset.  Returns (dataset, mean_r2 or None, error message, exit code)
    per dataset; a pretraining failure fails all of the cell's datasets.
    """
    from ..encoder import EncoderConfig

    try:
        cell_dir.mkdir(parents=True, exist_ok=True)
        encoder, vocab, _, _ = pretrain(
            corpus, spec, EncoderConfig(vocab_size=1, **encoder_args),
            contrastive, out_dir=cell_dir,
        )
    except PolyclError as exc:
        return [(p.stem, None, str(exc), exc.exit_code) for p in dataset_paths]
    results: list[tuple[str, float | None, str, int]] = []
    for p in dataset_paths:
        try:
            ds = load_property_csv(p)
            _, mean_r2 = cross_validate(ds, encoder, vocab, head, seed, n_folds)
            results.append((ds.name, mean_r2, "", 0))
        except PolyclError as exc:
            results.append((p.stem, None, str(exc), exc.exit_code))
    return results


def cmd_sweep(run_cfg: RunConfig, grid_path: str | None, workers: int) -> int:
    corpus_path = _require(run_cfg.corpus, "paths.corpus: required for sweep")
    out_dir = _require(run_cfg.output_dir,
                       "paths.output_dir: required for sweep (or pass --out-dir)")
    if not run_cfg.datasets:
        raise ConfigError("paths.datasets: sweep needs at least one dataset")
    specs = (_load_grid(grid_path, run_cfg.augmentation.ratio) if grid_path
             else default_grid(run_cfg.augmentation.ratio))
    if not specs:
        raise ConfigError("sweep grid is empty")
    if not any(s.is_baseline for s in specs):
        # the no-augmentation reference every cell is compared against
        specs.insert(0, AugmentationSpec(
            ExplicitMode.ORIGINAL, ExplicitMode.ORIGINAL,
            implicit_dropout=False, ratio=run_cfg.augmentation.ratio,
        ))
    labels = [s.label() for s in specs]
    dupes = {l for l in labels if labels.count(l) > 1}
    if dupes:
        raise ConfigError(f"sweep grid: duplicate specs {sorted(dupes)}")

    corpus = _load_corpus(corpus_path)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_fingerprint(run_cfg.resolved, out_dir)
    jobs = [
        (spec, corpus, run_cfg.encoder_args, run_cfg.contrastive, run_cfg.head,
         run_cfg.n_folds, list(run_cfg.datasets), out_dir / spec.label(),
         run_cfg.seed)
        for spec in specs
    ]
    log.info("sweep: %d specs x %d datasets, %d worker(s)",
             len(specs), len(run_cfg.datasets), workers)
    if workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            cell_results = list(pool.map(_sweep_cell_star, jobs))
    else:
        cell_results = [_sweep_cell(*job) for job in jobs]

    baseline_r2 = {
        dataset: r2
        for spec, results in zip(specs, cell_results) if spec.is_baseline
        for dataset, r2, _, _ in results
    }
    header = ["spec", "dataset", "mean_r2", "delta_vs_baseline", "tag", "error"]
    rows = []
    failures: list[int] = []
    for spec, results in zip(specs, cell_results):
        for dataset, r2, message, code in results:
            if r2 is None:
                rows.append([spec.label(), dataset, None, None, "failed", message])
                failures.append(code)
            elif spec.is_baseline:
                rows.append([spec.label(), dataset, r2, None, "baseline", ""])
            elif baseline_r2.get(dataset) is None:
                rows.append([spec.label(), dataset, r2, None, "no-baseline", ""])
            else:
                delta = r2 - baseline_r2[dataset]
                tag = "improved" if delta > 0 else "degraded"
                rows.append([spec.label(), dataset, r2, delta, tag, ""])
    write_csv(out_dir / SWEEP_TABLE_NAME, header, rows)
    log.info("sweep table written to %s", out_dir / SWEEP_TABLE_NAME)
    return max(failures) if failures else 0


def _sweep_cell_star(job):
    return _sweep_cell(*job)


def cmd_embed(args) -> int:
    encoder = _load_encoder(args.checkpoint)
    vocab = _load_vocab_for(args.checkpoint, args.vocab, encoder)
    corpus = _load_corpus(args.corpus)
    features = extract_features(corpus, encoder, vocab)
    header = ["smiles"] + [f"h{i}" for i in range(features.shape[1])]
    rows = [[text] + [float(x) for x in row]
            for text, row in zip(corpus, features.numpy())]
    write_csv(args.output, header, rows)
    return 0


def cmd_eval_repr(args, seed: int) -> int:
    corpus = _load_corpus(args.corpus)
    rows = []
    for ck in args.checkpoints:
        encoder = _load_encoder(ck)
        vocab = _load_vocab_for(ck, args.vocab, encoder)
        alignment, uniformity = evaluate_representation(corpus, encoder, vocab, seed)
        rows.append([ck, alignment, uniformity])
    write_csv(args.out, ["checkpoint", "alignment", "uniformity"], rows)
    return 0


def cmd_transfer(args, run_cfg: RunConfig | None, seed: int) -> int:
    encoder = _load_encoder(args.checkpoint)
    vocab = _load_vocab_for(args.checkpoint, args.vocab, encoder)
    dataset_path = Path(args.dataset)
    if not dataset_path.is_file():
        raise DataError(f"dataset file not found: {dataset_path}")
    ds = load_property_csv(dataset_path, name=args.name)
    head = run_cfg.head if run_cfg else HeadConfig()
    n_folds = run_cfg.n_folds if run_cfg else 5
    reports, mean_r2 = cross_validate(ds, encoder, vocab, head, seed, n_folds)
    rows: list[list] = [
        [ds.name, r.fold_index, r.rmse, r.r2, r.best_epoch] for r in reports
    ]
    mean_rmse = sum(r.rmse for r in reports) / len(reports)
    rows.append([ds.name, "mean", mean_rmse, mean_r2, None])
    write_csv(args.out, ["dataset", "fold", "rmse", "r2", "best_epoch"], rows)
    return 0


def cmd_augment(args, seed: int) -> int:
    if args.views < 1:
        raise ConfigError(f"--views must be >= 1, got {args.views}")
    spec = AugmentationSpec(
        branch_i=parse_mode(args.branch_i, "--branch-i"),
        branch_j=parse_mode(args.branch_j, "--branch-j"),
        implicit_dropout=not args.no_implicit,
        ratio=args.ratio,
    )
    corpus = _load_corpus(args.corpus)
    batches = [
        make_pair_batch(corpus, spec, mix64(seed, TAG_BATCH, p))
        for p in range(args.views)
    ]
    rows = [
        [anchor, p, detokenize(batches[p][i].view_i), detokenize(batches[p][i].view_j)]
        for i, anchor in enumerate(corpus)
        for p in range(args.views)
    ]
    write_csv(args.output, ["anchor", "pair", "view_i", "view_j"], rows)
    return 0


def _dispatch(args) -> int:
    seed = args.seed if args.seed is not None else 0
    if args.command == "pretrain":
        return cmd_pretrain(_load_config_for(args))
    if args.command == "sweep":
        return cmd_sweep(_load_config_for(args), args.grid, args.workers)
    if args.command == "embed":
        return cmd_embed(args)
    if args.command == "eval-repr":
        return cmd_eval_repr(args, seed)
    if args.command == "transfer":
        run_cfg = None
        if args.config is not None:
            run_cfg = load_run_config(args.config, seed_override=args.seed,
                                      out_dir_override=args.out_dir)
            seed = run_cfg.seed
        return cmd_transfer(args, run_cfg, seed)
    if args.command == "augment":
        return cmd_augment(args, seed)
    raise ConfigError(f"unknown command {args.command!r}")  # unreachable


def main(argv=None) -> int:
    _setup_logging()
    args = _build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except PolyclError as exc:
        print(f"polycl: error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())

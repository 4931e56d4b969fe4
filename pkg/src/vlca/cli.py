"""The ``vlca`` command line tool.

Subcommands::

    vlca semdist --glove <file> --classes a,b,c --out <csv> [--synonyms <file>]
    vlca svd-analyze --features <csv> --labels <csv>
    vlca train [--config <file>] --out <dir>
    vlca eval --model <file> --domain <name> [--config <file>]
    vlca gradcheck --seed <n> [--instances <n>]
    vlca prompts validate <file>

Exit codes: 0 on success, 1 on runtime errors (bad data, missing files),
2 on usage errors (argparse's convention).  Output files are written
atomically — a temp file in the target directory renamed into place.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .checks import run_all
from .config import build_runtime, load_settings
from .base import FeatureBatch
from .embeddings import (
    VocabularyPolicy,
    format_float,
    parse_glove,
    read_prompt_table,
    read_synonym_map,
    resolve_class,
)
from .exceptions import NameNotFoundError, VlcaError
from .fileio import atomic_write_text
from .lowrank import group_by_label, rank_surrogate, svd
from .model import load_model, save_model
from .semantics import build_distribution, build_similarity
from .trainer import evaluate_lodo, metrics_csv, train
from .validation import as_labels, as_matrix


def _split_names(raw: str) -> list[str]:
    names = [part.strip() for part in raw.split(",") if part.strip()]
    if not names:
        raise VlcaError("no names given")
    return names


def _read_csv_matrix(path: str) -> np.ndarray:
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for record in csv.reader(fh):
            if not record:
                continue
            rows.append([float(v) for v in record])
    if not rows:
        raise VlcaError(f"{path}: no rows")
    return as_matrix(rows, path)


def cmd_semdist(args: argparse.Namespace) -> int:
    class_names = _split_names(args.classes)
    synonyms = None
    if args.synonyms:
        synonyms = read_synonym_map(Path(args.synonyms).read_text(encoding="utf-8"))
    policy = VocabularyPolicy(synonym_map=synonyms) if synonyms is not None else VocabularyPolicy()
    with open(args.glove, "r", encoding="utf-8") as fh:
        table = parse_glove(fh)
    vectors = np.stack([resolve_class(table, policy, c) for c in class_names])
    dist = build_distribution(build_similarity(vectors))

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(class_names)
    for row in dist.probabilities:
        writer.writerow([format_float(v) for v in row])
    atomic_write_text(args.out, buf.getvalue())
    return 0


def cmd_svd_analyze(args: argparse.Namespace) -> int:
    features = _read_csv_matrix(args.features)
    raw_labels = _read_csv_matrix(args.labels).ravel()
    labels = as_labels(raw_labels, int(raw_labels.max()) + 1 if raw_labels.size else 1)
    if labels.shape[0] != features.shape[0]:
        raise VlcaError(
            f"{features.shape[0]} feature rows but {labels.shape[0]} labels"
        )
    batch = FeatureBatch(
        features=features, labels=labels, domains=np.zeros(labels.shape[0], dtype=np.int64)
    )
    writer = csv.writer(sys.stdout, lineterminator="\n")
    max_rank = min(features.shape[1], int(np.max(np.bincount(labels))))
    writer.writerow(
        ["class", "rows", "effective_rank", "surrogate"]
        + [f"sigma{i + 1}" for i in range(max_rank)]
    )
    for label, rows in group_by_label(batch):
        sigma = svd(rows).sigma
        out = rank_surrogate(rows)
        spectrum = [format_float(v) for v in sigma]
        spectrum += [""] * (max_rank - len(spectrum))
        writer.writerow(
            [
                label,
                rows.shape[0],
                int(out.diagnostics["effective_rank"]),
                format_float(out.value),
            ]
            + spectrum
        )
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    settings = load_settings(args.config)
    if args.seed is not None:
        from dataclasses import replace

        settings.train = replace(settings.train, seed=args.seed)
        settings.synth = replace(settings.synth, seed=args.seed)
        settings.model_seed = args.seed
    runtime = build_runtime(settings)
    model = runtime.new_model()
    result = train(
        model,
        runtime.datasets,
        settings.train,
        runtime.prompts,
        runtime.distribution,
        settings.resolved_held_out(),
        runtime.class_names,
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    atomic_write_text(out_dir / "metrics.csv", metrics_csv(result.metrics))
    save_model(result.model, out_dir / "model.bin")
    final = result.metrics[-1]
    print(
        f"trained {settings.train.epochs} epochs, held out {result.held_out!r}: "
        f"src_acc={final.src_acc:.4f} lodo_acc={final.lodo_acc:.4f}"
    )
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    settings = load_settings(args.config)
    runtime = build_runtime(settings)
    model = load_model(args.model)
    matches = [d for d in runtime.datasets if d.name == args.domain]
    if not matches:
        raise NameNotFoundError(
            f"domain {args.domain!r} not among {[d.name for d in runtime.datasets]}"
        )
    acc = evaluate_lodo(model, matches[0])
    print(f"accuracy on {args.domain!r}: {acc:.6f}")
    return 0


def cmd_gradcheck(args: argparse.Namespace) -> int:
    reports = run_all(args.seed, args.instances)
    failed = False
    for r in reports:
        status = "ok" if r.passed else "FAIL"
        print(
            f"{r.name}: max relative error {r.max_error:.3e} "
            f"(threshold {r.threshold:.0e}, {r.instances} instances) {status}"
        )
        failed = failed or not r.passed
    if failed:
        print("gradient check failed", file=sys.stderr)
        return 1
    return 0


def cmd_prompts_validate(args: argparse.Namespace) -> int:
    prompts = read_prompt_table(Path(args.file).read_text(encoding="utf-8"))
    print(
        f"ok: dim={prompts.k}, {len(prompts.style)} style, "
        f"{len(prompts.semantic)} semantic"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vlca",
        description="Semantic-supervision losses and a leave-one-domain-out trainer.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("semdist", help="write the interclass soft-label matrix as CSV")
    p.add_argument("--glove", required=True, help="word-vector text file")
    p.add_argument("--classes", required=True, help="comma-separated class names")
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--synonyms", help="optional from=to synonym file")
    p.set_defaults(func=cmd_semdist)

    p = sub.add_parser("svd-analyze", help="per-class singular spectra of a feature CSV")
    p.add_argument("--features", required=True, help="CSV of feature rows")
    p.add_argument("--labels", required=True, help="CSV of integer labels, one per row")
    p.set_defaults(func=cmd_svd_analyze)

    p = sub.add_parser("train", help="train on synthetic data, hold one domain out")
    p.add_argument("--config", help="key=value config file (defaults if omitted)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, help="override every seed in the config")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a saved model on one domain")
    p.add_argument("--model", required=True, help="model file from train")
    p.add_argument("--domain", required=True, help="domain name to evaluate")
    p.add_argument("--config", help="config that regenerates the data")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gradcheck", help="finite-difference checks of every gradient")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--instances", type=int, default=20, help="instances per loss")
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("prompts", help="prompt-table utilities")
    psub = p.add_subparsers(dest="prompts_command", required=True)
    v = psub.add_parser("validate", help="check a prompt table file")
    v.add_argument("file", help="prompt table path")
    v.set_defaults(func=cmd_prompts_validate)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except VlcaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

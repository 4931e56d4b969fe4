"""Export prompt embeddings for domain/class names to a portable table.

One-shot tool: render a style prompt per domain and a semantic prompt per
class, push each string through a text encoder, and write the tab-separated
``#vlca-prompts v1`` table that the training library ingests.  The file
format is the entire contract between the two components — nothing here
imports the consumer.

The encoder backend is an offline stand-in: a keyed hash expansion that
yields deterministic, unit-scale, *unnormalized* vectors with the same
identifier-to-width table as the published contrastive text encoders.  Real
checkpoint inference would slot in behind :func:`encode_text`; fetching
checkpoints is not possible here (:func:`download_weights` always raises
:class:`NetworkUnavailable`).  Outputs are reproducible across platforms and
runs, which is what the downstream training code needs from this tool.

Usage:
    python3 clip_export.py --model RN101 --domains photo,sketch \
        --classes dog,horse --out prompts.tsv
"""

from __future__ import annotations

import argparse
import hashlib
import math
import string
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Sequence

MAGIC = "#vlca-prompts v1"

#: Text-embedding width per known encoder identifier.
KNOWN_MODELS = {
    "RN50": 1024,
    "RN101": 512,
    "RN50x4": 640,
    "RN50x16": 768,
    "ViT-B/32": 512,
    "ViT-B/16": 512,
    "ViT-L/14": 768,
}

DEFAULT_STYLE_TEMPLATE = "The image style is {domain}"
DEFAULT_SEMANTIC_TEMPLATE = "An image of {category}"


class ExportError(Exception):
    """Base class for everything this tool raises on purpose."""


class UnknownModel(ExportError):
    """The model identifier has no registered encoder."""


class NetworkUnavailable(ExportError):
    """Checkpoint weights are neither cached nor fetchable."""


def _check_template(template: str, placeholder: str, label: str) -> None:
    names = [f for _, f, _, _ in string.Formatter().parse(template) if f is not None]
    if len(names) != 1:
        raise ExportError(
            f"{label} template must contain exactly one placeholder, got {len(names)}"
        )
    if names[0] != placeholder:
        raise ExportError(
            f"{label} template placeholder must be {{{placeholder}}}, got {{{names[0]}}}"
        )


def _check_names(names: Sequence[str], label: str) -> None:
    if not names:
        raise ExportError(f"at least one {label} name is required")
    seen = set()
    for name in names:
        if not name:
            raise ExportError(f"empty {label} name")
        if name in seen:
            raise ExportError(f"duplicate {label} name {name!r}")
        seen.add(name)


@dataclass
class ExportRequest:
    """Everything one export run needs; validates on construction."""

    domains: Sequence[str]
    classes: Sequence[str]
    out: Path
    model: str = "RN101"
    style_template: str = DEFAULT_STYLE_TEMPLATE
    semantic_template: str = DEFAULT_SEMANTIC_TEMPLATE

    def __post_init__(self) -> None:
        if not self.model:
            raise ExportError("model identifier must be non-empty")
        _check_names(self.domains, "domain")
        _check_names(self.classes, "class")
        _check_template(self.style_template, "domain", "style")
        _check_template(self.semantic_template, "category", "semantic")
        self.out = Path(self.out)


def model_dim(model: str) -> int:
    try:
        return KNOWN_MODELS[model]
    except KeyError:
        known = ", ".join(sorted(KNOWN_MODELS))
        raise UnknownModel(f"unknown model {model!r}; known: {known}") from None


def download_weights(model: str) -> None:
    """Fetch real encoder checkpoints — not possible in this environment."""
    model_dim(model)  # unknown identifiers fail first
    raise NetworkUnavailable(
        f"no network access and no cached checkpoint for {model!r}; "
        "the deterministic stand-in encoder serves this identifier"
    )


def _uniforms(key: str) -> Iterator[float]:
    """Unbounded stream of floats in (0, 1], reproducible for a given key."""
    counter = 0
    while True:
        digest = hashlib.sha256(f"{key}\x1f{counter}".encode("utf-8")).digest()
        for i in range(0, 32, 8):
            word = int.from_bytes(digest[i : i + 8], "big")
            yield (word + 1) / 2.0**64
        counter += 1


def encode_text(model: str, text: str) -> list[float]:
    """Deterministic text embedding: unit-scale, not normalized.

    Components are Gaussian with variance 1/dim (Box-Muller over a hashed
    uniform stream keyed by model and text), so the vector norm sits near 1
    but is never exactly 1 — normalization stays the consumer's decision.
    """
    dim = model_dim(model)
    gen = _uniforms(f"{model}\x1f{text}")
    values: list[float] = []
    while len(values) < dim:
        u1, u2 = next(gen), next(gen)
        radius = math.sqrt(-2.0 * math.log(u1))
        values.append(radius * math.cos(2.0 * math.pi * u2))
        if len(values) < dim:
            values.append(radius * math.sin(2.0 * math.pi * u2))
    scale = 1.0 / math.sqrt(dim)
    return [v * scale for v in values]


def _format_row(kind: str, name: str, vector: Sequence[float]) -> str:
    if not any(v != 0.0 for v in vector):
        raise ExportError(f"refusing to write a zero vector for {kind} {name!r}")
    return "\t".join([kind, name] + [f"{v:.17g}" for v in vector])


def render_table(request: ExportRequest) -> str:
    """The full file content for a request (also the determinism boundary)."""
    dim = model_dim(request.model)
    lines = [f"{MAGIC} dim={dim}"]
    for domain in request.domains:
        prompt = request.style_template.format(domain=domain)
        lines.append(_format_row("style", domain, encode_text(request.model, prompt)))
    for cls in request.classes:
        prompt = request.semantic_template.format(category=cls)
        lines.append(_format_row("semantic", cls, encode_text(request.model, prompt)))
    return "\n".join(lines) + "\n"


def export(request: ExportRequest) -> Path:
    """Write the prompt table for ``request`` and return the output path."""
    request.out.write_text(render_table(request), encoding="utf-8")
    return request.out


def _split_names(raw: str) -> list[str]:
    return [part.strip() for part in raw.split(",") if part.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="clip_export.py",
        description="export style/semantic prompt embeddings to a prompt table",
    )
    parser.add_argument("--model", default="RN101", help="encoder identifier")
    parser.add_argument("--domains", required=True, help="comma-separated domain names")
    parser.add_argument("--classes", required=True, help="comma-separated class names")
    parser.add_argument("--style-template", default=DEFAULT_STYLE_TEMPLATE)
    parser.add_argument("--semantic-template", default=DEFAULT_SEMANTIC_TEMPLATE)
    parser.add_argument("--out", required=True, help="output prompt-table path")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        request = ExportRequest(
            domains=_split_names(args.domains),
            classes=_split_names(args.classes),
            out=Path(args.out),
            model=args.model,
            style_template=args.style_template,
            semantic_template=args.semantic_template,
        )
        path = export(request)
    except ExportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    rows = len(request.domains) + len(request.classes)
    print(f"wrote {path} ({rows} rows, dim={model_dim(request.model)})")
    return 0


if __name__ == "__main__":
    sys.exit(main())

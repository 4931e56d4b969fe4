"""Word-vector and prompt-embedding ingestion.

Two text formats live here:

* whitespace-separated word vectors (``token v1 ... vd`` per line), loaded
  into an :class:`EmbeddingTable`;
* the prompt-table interchange format: a ``#vlca-prompts v1 dim=<k>`` header
  line followed by tab-separated ``style``/``semantic`` rows, one embedding
  per row.  Floats are printed with 17 significant digits so a write/read
  cycle is bit-exact.

Class names are resolved against the table through a
:class:`VocabularyPolicy`: lowercase, substitute synonyms for the full name,
then split compounds and sum the parts.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .exceptions import (
    BadHeaderError,
    DimensionMismatchError,
    DuplicateNameError,
    DuplicateTokenError,
    MalformedNumberError,
    MalformedRecordError,
    NameNotFoundError,
    TokenNotFoundError,
    ZeroVectorError,
)

PROMPT_TABLE_MAGIC = "#vlca-prompts v1"
STYLE_TEMPLATE = "The image style is {domain}"
STYLE_TEMPLATE_DATASET = "The image style is from dataset {domain}"
SEMANTIC_TEMPLATE = "An image of {category}"

DEFAULT_SYNONYMS: Mapping[str, str] = {
    "football": "soccer",
    "flipflop": "slipper",
}

_FLOAT_FMT = ".17g"


def format_float(x: float) -> str:
    """Render a float with enough digits to round-trip exactly."""
    return format(float(x), _FLOAT_FMT)


def _lines(stream: Iterable[str] | str) -> Iterator[str]:
    if isinstance(stream, str):
        return iter(stream.splitlines())
    return iter(stream)


@dataclass(frozen=True)
class EmbeddingTable:
    """An immutable token -> vector mapping with a single shared dimension."""

    dim: int
    _vectors: dict[str, np.ndarray] = field(repr=False)

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise DimensionMismatchError(f"dim must be positive, got {self.dim}")
        for token, vec in self._vectors.items():
            if not token or any(ch.isspace() for ch in token):
                raise MalformedRecordError(f"bad token {token!r}")
            if vec.shape != (self.dim,):
                raise DimensionMismatchError(
                    f"vector for {token!r} has shape {vec.shape}, expected ({self.dim},)"
                )
            vec.flags.writeable = False

    def __len__(self) -> int:
        return len(self._vectors)

    def __contains__(self, token: str) -> bool:
        return token in self._vectors

    def tokens(self) -> Iterator[str]:
        return iter(self._vectors)

    def vector(self, token: str) -> np.ndarray:
        try:
            return self._vectors[token]
        except KeyError:
            raise TokenNotFoundError(f"token {token!r} not in embedding table") from None


def parse_glove(stream: Iterable[str] | str) -> EmbeddingTable:
    """Parse whitespace-separated word vectors into an :class:`EmbeddingTable`.

    The dimension is fixed by the first nonempty line; every later line must
    match it.  Duplicate tokens and unparsable numbers are errors; blank
    lines are skipped.
    """
    vectors: dict[str, np.ndarray] = {}
    dim: int | None = None
    for lineno, raw in enumerate(_lines(stream), start=1):
        fields = raw.split()
        if not fields:
            continue
        token, values = fields[0], fields[1:]
        if dim is None:
            dim = len(values)
            if dim == 0:
                raise DimensionMismatchError(
                    f"line {lineno}: first entry has no vector components"
                )
        elif len(values) != dim:
            raise DimensionMismatchError(
                f"line {lineno}: expected {dim} components, got {len(values)}"
            )
        if token in vectors:
            raise DuplicateTokenError(f"line {lineno}: duplicate token {token!r}")
        try:
            vec = np.array(values, dtype=np.float64)
        except ValueError:
            raise MalformedNumberError(
                f"line {lineno}: bad float among {values!r}"
            ) from None
        if not np.all(np.isfinite(vec)):
            raise MalformedNumberError(f"line {lineno}: non-finite component")
        vectors[token] = vec
    if dim is None:
        raise DimensionMismatchError("empty embedding stream")
    return EmbeddingTable(dim=dim, _vectors=vectors)


@dataclass(frozen=True)
class VocabularyPolicy:
    """How class names map onto vocabulary tokens.

    ``synonym_map`` rewrites a whole (lowercased) class name before lookup;
    ``compound_separators`` lists the characters that split a compound name
    into summed parts.
    """

    synonym_map: Mapping[str, str] = field(default_factory=lambda: dict(DEFAULT_SYNONYMS))
    compound_separators: str = " _-"

    def __post_init__(self) -> None:
        normalized = {k.lower(): v.lower() for k, v in self.synonym_map.items()}
        object.__setattr__(self, "synonym_map", normalized)

    def split(self, name: str) -> list[str]:
        pattern = "[" + re.escape(self.compound_separators) + "]+"
        return [part for part in re.split(pattern, name) if part]


def read_synonym_map(stream: Iterable[str] | str) -> dict[str, str]:
    """Read ``from=to`` lines (``#`` comments and blanks allowed)."""
    mapping: dict[str, str] = {}
    for lineno, raw in enumerate(_lines(stream), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise MalformedRecordError(f"line {lineno}: expected 'from=to', got {line!r}")
        src, dst = line.split("=", 1)
        src, dst = src.strip(), dst.strip()
        if not src or not dst:
            raise MalformedRecordError(f"line {lineno}: empty side in {line!r}")
        if src in mapping:
            raise DuplicateTokenError(f"line {lineno}: duplicate synonym source {src!r}")
        mapping[src] = dst
    return mapping


def resolve_class(table: EmbeddingTable, policy: VocabularyPolicy, name: str) -> np.ndarray:
    """Map a class name to a vector: lowercase, synonym, then split-and-sum.

    A single-token name returns that token's vector; a compound returns the
    sum of its parts' vectors.  Any missing part raises
    :class:`TokenNotFoundError`.
    """
    lowered = name.lower()
    lowered = policy.synonym_map.get(lowered, lowered)
    parts = policy.split(lowered)
    if not parts:
        raise MalformedRecordError(f"class name {name!r} has no usable tokens")
    try:
        vectors = [table.vector(part) for part in parts]
    except TokenNotFoundError as exc:
        raise TokenNotFoundError(f"while resolving class {name!r}: {exc}") from None
    if len(vectors) == 1:
        return vectors[0].copy()
    return np.sum(vectors, axis=0)


@dataclass(frozen=True)
class PromptEmbeddings:
    """Named style (per-domain) and semantic (per-class) embeddings, all of
    dimension ``k`` and all nonzero."""

    k: int
    style: tuple[tuple[str, np.ndarray], ...]
    semantic: tuple[tuple[str, np.ndarray], ...]

    def __post_init__(self) -> None:
        if self.k < 1:
            raise DimensionMismatchError(f"k must be positive, got {self.k}")
        for kind in ("style", "semantic"):
            entries = getattr(self, kind)
            seen: set[str] = set()
            for name, vec in entries:
                if not name:
                    raise MalformedRecordError(f"empty {kind} name")
                if name in seen:
                    raise DuplicateNameError(f"duplicate {kind} name {name!r}")
                seen.add(name)
                if vec.shape != (self.k,):
                    raise DimensionMismatchError(
                        f"{kind} {name!r} has shape {vec.shape}, expected ({self.k},)"
                    )
                if not np.all(np.isfinite(vec)):
                    raise MalformedNumberError(f"{kind} {name!r} has non-finite values")
                if np.linalg.norm(vec) == 0.0:
                    raise ZeroVectorError(f"{kind} {name!r} is the zero vector")
                vec.flags.writeable = False
        object.__setattr__(self, "_style_by_name", {n: v for n, v in self.style})
        object.__setattr__(self, "_semantic_by_name", {n: v for n, v in self.semantic})

    def style_vector(self, name: str) -> np.ndarray:
        try:
            return self._style_by_name[name]  # type: ignore[attr-defined]
        except KeyError:
            raise NameNotFoundError(f"no style embedding named {name!r}") from None

    def semantic_vector(self, name: str) -> np.ndarray:
        try:
            return self._semantic_by_name[name]  # type: ignore[attr-defined]
        except KeyError:
            raise NameNotFoundError(f"no semantic embedding named {name!r}") from None

    def style_names(self) -> list[str]:
        return [n for n, _ in self.style]

    def semantic_names(self) -> list[str]:
        return [n for n, _ in self.semantic]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PromptEmbeddings):
            return NotImplemented
        if self.k != other.k:
            return False
        for kind in ("style", "semantic"):
            a, b = getattr(self, kind), getattr(other, kind)
            if len(a) != len(b):
                return False
            for (na, va), (nb, vb) in zip(a, b):
                if na != nb or not np.array_equal(va, vb):
                    return False
        return True


def read_prompt_table(stream: Iterable[str] | str) -> PromptEmbeddings:
    """Parse the tab-separated prompt-table format."""
    it = _lines(stream)
    header = next(it, None)
    if header is None:
        raise BadHeaderError("empty prompt table")
    match = re.fullmatch(re.escape(PROMPT_TABLE_MAGIC) + r" dim=(\d+)", header.rstrip("\n"))
    if not match:
        raise BadHeaderError(f"bad header line {header!r}")
    k = int(match.group(1))
    if k < 1:
        raise BadHeaderError(f"dim must be positive, got {k}")
    style: list[tuple[str, np.ndarray]] = []
    semantic: list[tuple[str, np.ndarray]] = []
    for lineno, raw in enumerate(it, start=2):
        line = raw.rstrip("\n")
        if not line:
            continue
        fields = line.split("\t")
        kind, name, values = fields[0], fields[1] if len(fields) > 1 else "", fields[2:]
        if kind not in ("style", "semantic"):
            raise MalformedRecordError(f"line {lineno}: unknown row kind {kind!r}")
        if not name:
            raise MalformedRecordError(f"line {lineno}: empty name")
        if len(values) != k:
            raise DimensionMismatchError(
                f"line {lineno}: expected {k} components, got {len(values)}"
            )
        try:
            vec = np.array(values, dtype=np.float64)
        except ValueError:
            raise MalformedNumberError(f"line {lineno}: bad float") from None
        (style if kind == "style" else semantic).append((name, vec))
    return PromptEmbeddings(k=k, style=tuple(style), semantic=tuple(semantic))


def write_prompt_table(prompts: PromptEmbeddings) -> str:
    """Serialize to the prompt-table text format (trailing newline included)."""
    out = [f"{PROMPT_TABLE_MAGIC} dim={prompts.k}"]
    for kind, entries in (("style", prompts.style), ("semantic", prompts.semantic)):
        for name, vec in entries:
            out.append("\t".join([kind, name] + [format_float(v) for v in vec]))
    return "\n".join(out) + "\n"


def hashed_unit_vector(text: str, dim: int) -> np.ndarray:
    """A deterministic unit vector derived from ``text`` alone.

    Components come from counter-mode SHA-256, mapped to (-1, 1); the result
    is stable across platforms and library versions.
    """
    if dim < 1:
        raise DimensionMismatchError(f"dim must be positive, got {dim}")
    raw = np.empty(dim, dtype=np.float64)
    for j in range(dim):
        digest = hashlib.sha256(f"{text}#{j}".encode("utf-8")).digest()
        raw[j] = (int.from_bytes(digest[:8], "big") / 2.0**64) * 2.0 - 1.0
    norm = np.linalg.norm(raw)
    if norm < 1e-12:  # astronomically unlikely; keep the invariant anyway
        raw[:] = 0.0
        raw[0] = 1.0
        return raw
    return raw / norm


def pseudo_prompt_table(
    domain_names: Sequence[str],
    class_names: Sequence[str],
    k: int,
    style_template: str = STYLE_TEMPLATE,
    semantic_template: str = SEMANTIC_TEMPLATE,
) -> PromptEmbeddings:
    """Build a stand-in prompt table from hashed prompt strings.

    Useful wherever a real text encoder is unavailable: the vectors are
    arbitrary but deterministic functions of the rendered prompt strings, so
    swapping in encoder output later is a pure file substitution.
    """
    style = tuple(
        (name, hashed_unit_vector(style_template.format(domain=name), k))
        for name in domain_names
    )
    semantic = tuple(
        (name, hashed_unit_vector(semantic_template.format(category=name), k))
        for name in class_names
    )
    return PromptEmbeddings(k=k, style=style, semantic=semantic)

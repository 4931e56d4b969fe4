"""``key=value`` configuration files and the runtime objects built from them.

Keys are namespaced with dots (``train.lr``, ``synth.num_classes``); ``#``
starts a comment.  Unknown keys are errors — silent typos in experiment
configs are worse than a hard stop.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from .base import LossWeights
from .datasets import (
    DEFAULT_CLASS_NAMES,
    DEFAULT_DOMAIN_NAMES,
    DomainDataset,
    SynthConfig,
    default_names,
    generate_synth,
)
from .embeddings import (
    PromptEmbeddings,
    VocabularyPolicy,
    parse_glove,
    pseudo_prompt_table,
    read_prompt_table,
    read_synonym_map,
    resolve_class,
)
from .exceptions import ConfigError
from .model import Model, ModelDims
from .semantics import SemanticDistribution, build_distribution, build_similarity
from .trainer import TrainConfig, default_distribution

_BOOL = {"true": True, "false": False, "1": True, "0": False}


def parse_config_text(stream: Iterable[str] | str) -> dict[str, str]:
    """Raw ``key=value`` pairs, comments and blank lines stripped."""
    if isinstance(stream, str):
        stream = stream.splitlines()
    out: dict[str, str] = {}
    for lineno, raw in enumerate(stream, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {line!r}")
        key, value = line.split("=", 1)
        key, value = key.strip(), value.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


@dataclass
class Settings:
    """Everything a training or evaluation run needs, with defaults."""

    synth: SynthConfig = field(default_factory=SynthConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    hidden_dim: int = 32
    feature_dim: int = 16
    head_dim: int | None = None
    model_seed: int = 0
    held_out: str | None = None  # default: last domain name
    class_names: list[str] | None = None
    domain_names: list[str] | None = None
    prompt_dim: int | None = None  # default: head output dim
    prompts_file: str | None = None
    glove_file: str | None = None
    synonyms_file: str | None = None

    def resolved_class_names(self) -> list[str]:
        if self.class_names is not None:
            return list(self.class_names)
        return default_names(self.synth.num_classes, DEFAULT_CLASS_NAMES, "class")

    def resolved_domain_names(self) -> list[str]:
        if self.domain_names is not None:
            return list(self.domain_names)
        return default_names(self.synth.num_domains, DEFAULT_DOMAIN_NAMES, "domain")

    def resolved_head_dim(self) -> int:
        if self.head_dim is not None:
            return self.head_dim
        if self.prompts_file is None and self.prompt_dim is not None:
            return self.prompt_dim
        return self.feature_dim

    def resolved_held_out(self) -> str:
        if self.held_out is not None:
            return self.held_out
        return self.resolved_domain_names()[-1]


def _convert(key: str, value: str, kind: type):
    try:
        if kind is bool:
            lowered = value.lower()
            if lowered not in _BOOL:
                raise ValueError(value)
            return _BOOL[lowered]
        if kind is int:
            return int(value)
        if kind is float:
            return float(value)
        return value
    except ValueError:
        raise ConfigError(f"bad value for {key}: {value!r} (expected {kind.__name__})") from None


_SYNTH_FIELDS = {
    "num_domains": int,
    "num_classes": int,
    "samples_per_class": int,  # maps to samples_per_class_per_domain
    "input_dim": int,
    "nuisance_dim": int,
    "noise_scale": float,
    "domain_strength": float,
    "seed": int,
}

_TRAIN_FIELDS = {
    "epochs": int,
    "batch_size": int,
    "lr": float,
    "lr_decay_factor": float,
    "lr_decay_epoch": int,
    "weight_decay": float,
    "val_fraction": float,
    "seed": int,
    "held_out": str,
}

_MODEL_FIELDS = {"hidden_dim": int, "feature_dim": int, "head_dim": int, "seed": int}

_LOSS_FIELDS = {"alpha": float, "beta": float}


def load_settings(path: str | Path | None) -> Settings:
    """Parse a config file into :class:`Settings`; ``None`` means defaults."""
    pairs = {}
    if path is not None:
        text = Path(path).read_text(encoding="utf-8")
        pairs = parse_config_text(text)
    return settings_from_pairs(pairs)


def settings_from_pairs(pairs: dict[str, str]) -> Settings:
    synth_kwargs: dict = {}
    train_kwargs: dict = {}
    loss_kwargs: dict = {}
    settings = Settings()
    for key, value in pairs.items():
        if "." not in key:
            raise ConfigError(f"unknown key {key!r}")
        section, name = key.split(".", 1)
        if section == "synth":
            if name == "classes":
                settings.class_names = [c.strip() for c in value.split(",") if c.strip()]
            elif name == "domains":
                settings.domain_names = [d.strip() for d in value.split(",") if d.strip()]
            elif name in _SYNTH_FIELDS:
                target = "samples_per_class_per_domain" if name == "samples_per_class" else name
                synth_kwargs[target] = _convert(key, value, _SYNTH_FIELDS[name])
            else:
                raise ConfigError(f"unknown key {key!r}")
        elif section == "train":
            if name == "held_out":
                settings.held_out = value
            elif name in _TRAIN_FIELDS:
                train_kwargs[name] = _convert(key, value, _TRAIN_FIELDS[name])
            else:
                raise ConfigError(f"unknown key {key!r}")
        elif section == "loss":
            if name in _LOSS_FIELDS:
                loss_kwargs[name] = _convert(key, value, _LOSS_FIELDS[name])
            else:
                raise ConfigError(f"unknown key {key!r}")
        elif section == "decouple":
            if name == "style_mode":
                train_kwargs["style_mode"] = value
            else:
                raise ConfigError(f"unknown key {key!r}")
        elif section == "model":
            if name in _MODEL_FIELDS:
                converted = _convert(key, value, _MODEL_FIELDS[name])
                if name == "seed":
                    settings.model_seed = converted
                else:
                    setattr(settings, name, converted)
            else:
                raise ConfigError(f"unknown key {key!r}")
        elif section == "prompts":
            if name == "file":
                settings.prompts_file = value
            elif name == "dim":
                settings.prompt_dim = _convert(key, value, int)
            else:
                raise ConfigError(f"unknown key {key!r}")
        elif section == "embeddings":
            if name == "glove":
                settings.glove_file = value
            elif name == "synonyms":
                settings.synonyms_file = value
            else:
                raise ConfigError(f"unknown key {key!r}")
        else:
            raise ConfigError(f"unknown key {key!r}")
    if loss_kwargs:
        train_kwargs["weights"] = LossWeights(**loss_kwargs)
    if synth_kwargs:
        settings.synth = SynthConfig(**synth_kwargs)
    if train_kwargs:
        settings.train = TrainConfig(**train_kwargs)
    # name overrides must stay consistent with the synthetic sizes
    if settings.class_names is not None and len(settings.class_names) != settings.synth.num_classes:
        raise ConfigError(
            f"synth.classes lists {len(settings.class_names)} names but "
            f"synth.num_classes is {settings.synth.num_classes}"
        )
    if settings.domain_names is not None and len(settings.domain_names) != settings.synth.num_domains:
        raise ConfigError(
            f"synth.domains lists {len(settings.domain_names)} names but "
            f"synth.num_domains is {settings.synth.num_domains}"
        )
    return settings


@dataclass
class Runtime:
    """Concrete objects a run needs, assembled from :class:`Settings`."""

    settings: Settings
    datasets: list[DomainDataset]
    prompts: PromptEmbeddings
    distribution: SemanticDistribution
    class_names: list[str]
    domain_names: list[str]

    def new_model(self) -> Model:
        s = self.settings
        dims = ModelDims(
            input_dim=s.synth.input_dim,
            hidden_dim=s.hidden_dim,
            feature_dim=s.feature_dim,
            num_classes=s.synth.num_classes,
            head_dim=self.prompts.k,
        )
        return Model(dims, seed=s.model_seed)


def build_runtime(settings: Settings) -> Runtime:
    """Generate data and assemble prompts + soft labels per the settings.

    Prompt embeddings come from ``prompts.file`` when set, otherwise from the
    hash-based stand-in.  Soft labels come from word vectors when
    ``embeddings.glove`` is set, otherwise from the prompt table's semantic
    vectors.
    """
    class_names = settings.resolved_class_names()
    domain_names = settings.resolved_domain_names()
    datasets = generate_synth(settings.synth, domain_names, class_names)

    if settings.prompts_file is not None:
        prompts = read_prompt_table(Path(settings.prompts_file).read_text(encoding="utf-8"))
    else:
        k = settings.prompt_dim if settings.prompt_dim is not None else settings.resolved_head_dim()
        prompts = pseudo_prompt_table(domain_names, class_names, k)

    if settings.glove_file is not None:
        with open(settings.glove_file, "r", encoding="utf-8") as fh:
            table = parse_glove(fh)
        synonyms = dict()
        if settings.synonyms_file is not None:
            synonyms = read_synonym_map(
                Path(settings.synonyms_file).read_text(encoding="utf-8")
            )
            policy = VocabularyPolicy(synonym_map=synonyms)
        else:
            policy = VocabularyPolicy()
        vectors = np.stack([resolve_class(table, policy, c) for c in class_names])
        distribution = build_distribution(build_similarity(vectors))
    else:
        distribution = default_distribution(prompts, class_names)

    return Runtime(
        settings=settings,
        datasets=datasets,
        prompts=prompts,
        distribution=distribution,
        class_names=class_names,
        domain_names=domain_names,
    )

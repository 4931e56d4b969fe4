"""Deterministic synthetic multi-domain classification data.

Each class has a fixed prototype in a shared "content" subspace.  A domain
applies its own affine distortion to the content coordinates and appends
nuisance coordinates that carry a domain-specific offset but no class
information.  At ``domain_strength = 0`` every domain reduces to the identity
map with zero nuisance, so all domains are identically distributed by
construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .exceptions import ConfigError, EmptyDatasetError

DEFAULT_CLASS_NAMES = (
    "dog",
    "elephant",
    "giraffe",
    "guitar",
    "horse",
    "house",
    "person",
)
DEFAULT_DOMAIN_NAMES = ("photo", "painting", "cartoon", "sketch")


@dataclass(frozen=True)
class SynthConfig:
    """Knobs for the synthetic generator.

    ``input_dim`` counts the full sample dimension, nuisance coordinates
    included; the content subspace has ``input_dim - nuisance_dim``
    coordinates.
    """

    num_domains: int = 4
    num_classes: int = 7
    samples_per_class_per_domain: int = 16
    input_dim: int = 12
    nuisance_dim: int = 3
    noise_scale: float = 0.3
    domain_strength: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.num_domains < 2:
            raise ConfigError("num_domains must be >= 2")
        if self.num_classes < 2:
            raise ConfigError("num_classes must be >= 2")
        if self.samples_per_class_per_domain < 1:
            raise ConfigError("samples_per_class_per_domain must be >= 1")
        if self.nuisance_dim < 0 or self.nuisance_dim >= self.input_dim:
            raise ConfigError("need 0 <= nuisance_dim < input_dim")
        if self.noise_scale < 0 or self.domain_strength < 0:
            raise ConfigError("noise_scale and domain_strength must be >= 0")

    @property
    def content_dim(self) -> int:
        return self.input_dim - self.nuisance_dim


@dataclass(frozen=True)
class DomainTransform:
    """The affine map and nuisance statistics one domain applies."""

    matrix: np.ndarray  # (content_dim, content_dim)
    shift: np.ndarray  # (content_dim,)
    nuisance_offset: np.ndarray  # (nuisance_dim,)


@dataclass
class DomainDataset:
    """Labeled samples from a single domain."""

    name: str
    domain_index: int
    x: np.ndarray
    y: np.ndarray

    @property
    def num_samples(self) -> int:
        return self.x.shape[0]


def default_names(count: int, base: Sequence[str], stem: str) -> list[str]:
    """First ``count`` names, extending ``base`` with ``{stem}{i}`` as needed."""
    names = list(base[:count])
    while len(names) < count:
        names.append(f"{stem}{len(names)}")
    return names


def class_prototypes(config: SynthConfig) -> np.ndarray:
    """The shared per-class content prototypes (``num_classes x content_dim``)."""
    root = np.random.SeedSequence(config.seed)
    proto_seq = root.spawn(1 + config.num_domains)[0]
    rng = np.random.default_rng(proto_seq)
    return rng.standard_normal((config.num_classes, config.content_dim))


def domain_transforms(config: SynthConfig) -> list[DomainTransform]:
    """Each domain's distortion, scaled by ``domain_strength``.

    At strength zero: identity matrix, zero shift, zero nuisance offset.
    """
    root = np.random.SeedSequence(config.seed)
    seqs = root.spawn(1 + config.num_domains)[1:]
    s = config.domain_strength
    d = config.content_dim
    out = []
    for seq in seqs:
        rng = np.random.default_rng(seq)
        mix = rng.standard_normal((d, d)) / np.sqrt(d)
        shift = rng.standard_normal(d)
        offset = rng.standard_normal(config.nuisance_dim)
        out.append(
            DomainTransform(
                matrix=np.eye(d) + s * 0.4 * mix,
                shift=s * 0.5 * shift,
                nuisance_offset=s * 1.5 * offset,
            )
        )
    return out


def generate_synth(
    config: SynthConfig,
    domain_names: Sequence[str] | None = None,
    class_names: Sequence[str] | None = None,
) -> list[DomainDataset]:
    """Draw the full multi-domain dataset for ``config``.

    Purely a function of the config (same config, bit-identical data): all
    randomness flows from one root :class:`numpy.random.SeedSequence`.
    """
    if domain_names is None:
        domain_names = default_names(config.num_domains, DEFAULT_DOMAIN_NAMES, "domain")
    if class_names is None:
        class_names = default_names(config.num_classes, DEFAULT_CLASS_NAMES, "class")
    if len(domain_names) != config.num_domains:
        raise ConfigError(
            f"{len(domain_names)} domain names for {config.num_domains} domains"
        )
    if len(class_names) != config.num_classes:
        raise ConfigError(
            f"{len(class_names)} class names for {config.num_classes} classes"
        )

    protos = class_prototypes(config)
    transforms = domain_transforms(config)
    sample_root = np.random.SeedSequence(entropy=config.seed, spawn_key=(1,))
    sample_seqs = sample_root.spawn(config.num_domains)

    per_class = config.samples_per_class_per_domain
    datasets = []
    for d, (name, tf) in enumerate(zip(domain_names, transforms)):
        rng = np.random.default_rng(sample_seqs[d])
        n = per_class * config.num_classes
        y = np.repeat(np.arange(config.num_classes), per_class)
        content = protos[y] + config.noise_scale * rng.standard_normal(
            (n, config.content_dim)
        )
        content = content @ tf.matrix.T + tf.shift
        nuisance = tf.nuisance_offset + config.domain_strength * 0.5 * (
            rng.standard_normal((n, config.nuisance_dim))
        )
        x = np.concatenate([content, nuisance], axis=1)
        datasets.append(DomainDataset(name=name, domain_index=d, x=x, y=y))
    return datasets


def pooled(datasets: Sequence[DomainDataset]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Stack several domains into ``(x, y, domain_index)`` arrays."""
    if not datasets:
        raise EmptyDatasetError("no datasets to pool")
    x = np.concatenate([d.x for d in datasets])
    y = np.concatenate([d.y for d in datasets])
    dom = np.concatenate([np.full(d.num_samples, d.domain_index) for d in datasets])
    return x, y, dom

"""SGD training with the combined objective, under a leave-one-domain-out split.

One domain is held out entirely: its samples never reach a gradient step and
only appear in the per-epoch held-out accuracy.  The remaining (source)
domains are each split 90/10 into train/validation; validation feeds the
``src_acc`` column.  Every consumed training sample is tagged with its domain
index so the protocol can be audited after the fact.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .base import FeatureBatch, LossWeights
from .datasets import DomainDataset, default_names, DEFAULT_CLASS_NAMES
from .decouple import STYLE_MODES
from .embeddings import PromptEmbeddings, pseudo_prompt_table
from .exceptions import (
    ConfigError,
    EmptyDatasetError,
    NameNotFoundError,
    NonFiniteLossError,
)
from .model import Model
from .objective import total_loss
from .semantics import SemanticDistribution, build_distribution, build_similarity


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 50
    batch_size: int = 16
    lr: float = 1e-3
    lr_decay_factor: float = 0.1
    lr_decay_epoch: int = 40
    weight_decay: float = 5e-4
    weights: LossWeights = field(default_factory=LossWeights)
    style_mode: str = "squared_cosine"
    val_fraction: float = 0.1
    seed: int = 0

    def __post_init__(self) -> None:
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigError("epochs and batch_size must be >= 1")
        # lr == 0 is allowed: a null update is a useful degenerate case
        if self.lr < 0 or self.lr_decay_factor <= 0 or self.weight_decay < 0:
            raise ConfigError("lr must be >= 0, lr_decay_factor > 0, weight_decay >= 0")
        if self.style_mode not in STYLE_MODES:
            raise ConfigError(f"style_mode must be one of {STYLE_MODES}")
        if not 0.0 <= self.val_fraction < 1.0:
            raise ConfigError("val_fraction must lie in [0, 1)")

    def lr_at(self, epoch: int) -> float:
        """Learning rate for a 0-based epoch index (step decay)."""
        if epoch >= self.lr_decay_epoch:
            return self.lr * self.lr_decay_factor
        return self.lr


@dataclass
class EpochMetrics:
    epoch: int
    l_cls: float
    l_decouple: float
    l_semantic: float
    l_approx: float
    total: float
    src_acc: float
    lodo_acc: float


@dataclass
class TrainResult:
    model: Model
    metrics: list[EpochMetrics]
    held_out: str
    domain_names: list[str]
    class_names: list[str]
    consumed_domains: frozenset[int]
    consumed_counts: dict[int, int]


def evaluate(model: Model, x: np.ndarray, y: np.ndarray) -> float:
    """Plain accuracy; argmax ties go to the lower class index."""
    if x.shape[0] == 0:
        raise EmptyDatasetError("cannot evaluate on an empty dataset")
    return float(np.mean(model.predict(x) == np.asarray(y)))


def evaluate_lodo(model: Model, dataset: DomainDataset) -> float:
    """Accuracy on a held-out domain's full dataset."""
    return evaluate(model, dataset.x, dataset.y)


def split_sources(
    datasets: Sequence[DomainDataset], val_fraction: float, seed: int
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Deterministic per-domain train/validation index split."""
    train_idx, val_idx = [], []
    for ds in datasets:
        rng = np.random.default_rng(
            np.random.SeedSequence(entropy=seed, spawn_key=(17, ds.domain_index))
        )
        perm = rng.permutation(ds.num_samples)
        n_val = int(round(val_fraction * ds.num_samples)) if val_fraction > 0 else 0
        n_val = min(n_val, ds.num_samples - 1)  # keep at least one training row
        val_idx.append(perm[:n_val])
        train_idx.append(perm[n_val:])
    return train_idx, val_idx


def batch_slices(n: int, batch_size: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Shuffled index batches covering all ``n`` rows; last one may be short."""
    perm = rng.permutation(n)
    return [perm[i : i + batch_size] for i in range(0, n, batch_size)]


def mean_group_size(labels: np.ndarray, batch_size: int, seed: int, epochs: int = 3) -> float:
    """Average size of the per-class groups the low-rank term sees.

    Mirrors the trainer's batch partitioning: shuffle, chunk, group each
    chunk by label, and average group sizes over every chunk of ``epochs``
    simulated epochs.
    """
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    sizes: list[int] = []
    for _ in range(epochs):
        for idx in batch_slices(labels.size, batch_size, rng):
            _, counts = np.unique(labels[idx], return_counts=True)
            sizes.extend(counts.tolist())
    return float(np.mean(sizes))


def default_distribution(prompts: PromptEmbeddings, class_names: Sequence[str]) -> SemanticDistribution:
    """Soft labels derived from the prompt table's semantic vectors."""
    vectors = np.stack([prompts.semantic_vector(c) for c in class_names])
    return build_distribution(build_similarity(vectors))


def run_epoch(
    model: Model,
    x: np.ndarray,
    y: np.ndarray,
    dom: np.ndarray,
    config: TrainConfig,
    lr: float,
    rng: np.random.Generator,
    prompts: PromptEmbeddings,
    distribution: SemanticDistribution,
    class_names: Sequence[str],
    domain_names: Sequence[str],
    consumed: dict[int, int] | None = None,
) -> dict[str, float]:
    """One pass over the data, updating ``model`` in place.

    Returns the epoch's mean per-batch loss components.  ``consumed`` (when
    given) accumulates how many samples of each domain index reached a
    gradient step — the audit trail for the leave-one-domain-out protocol.
    """
    sums = {"l_cls": 0.0, "l_decouple": 0.0, "l_semantic": 0.0, "l_approx": 0.0, "total": 0.0}
    batches = batch_slices(x.shape[0], config.batch_size, rng)
    for step, idx in enumerate(batches):
        cache = model.forward(x[idx])
        try:
            batch = FeatureBatch(
                features=cache["features"], labels=y[idx], domains=dom[idx]
            )
            loss = total_loss(
                batch,
                cache["logits"],
                prompts,
                model.head,
                distribution,
                config.weights,
                class_names,
                domain_names,
                config.style_mode,
            )
        except NonFiniteLossError as exc:
            raise NonFiniteLossError(f"step {step + 1}: {exc}") from None
        if not np.isfinite(loss.value):
            raise NonFiniteLossError(f"step {step + 1}: non-finite loss")
        grads = model.backward(cache, loss.grad_logits, loss.grad_features, loss.grad_params)
        model.sgd_step(grads, lr, config.weight_decay)
        if consumed is not None:
            for d, count in zip(*np.unique(dom[idx], return_counts=True)):
                consumed[int(d)] = consumed.get(int(d), 0) + int(count)
        sums["l_cls"] += loss.diagnostics["l_cls"]
        sums["l_decouple"] += loss.diagnostics["l_decouple"]
        sums["l_semantic"] += loss.diagnostics["l_semantic"]
        sums["l_approx"] += loss.diagnostics["l_approximate"]
        sums["total"] += loss.value
    return {k: v / len(batches) for k, v in sums.items()}


def train(
    model: Model,
    datasets: Sequence[DomainDataset],
    config: TrainConfig,
    prompts: PromptEmbeddings,
    distribution: SemanticDistribution,
    held_out: str,
    class_names: Sequence[str] | None = None,
) -> TrainResult:
    """Train on all domains except ``held_out``; log metrics per epoch.

    The held-out domain is evaluated (``lodo_acc``) but never trained on;
    ``consumed_domains`` records which domain indices actually reached a
    gradient step.
    """
    domain_names = [d.name for d in datasets]
    if held_out not in domain_names:
        raise NameNotFoundError(f"held-out domain {held_out!r} not among {domain_names}")
    if class_names is None:
        class_names = default_names(
            model.dims.num_classes, DEFAULT_CLASS_NAMES, "class"
        )
    if len(class_names) != model.dims.num_classes:
        raise ConfigError(
            f"{len(class_names)} class names for {model.dims.num_classes} classes"
        )
    # fail fast if any needed prompt embedding is missing
    for name in class_names:
        prompts.semantic_vector(name)
    sources = [d for d in datasets if d.name != held_out]
    held = next(d for d in datasets if d.name == held_out)
    for d in sources:
        prompts.style_vector(d.name)

    train_idx, val_idx = split_sources(sources, config.val_fraction, config.seed)
    x_train = np.concatenate([d.x[i] for d, i in zip(sources, train_idx)])
    y_train = np.concatenate([d.y[i] for d, i in zip(sources, train_idx)])
    dom_train = np.concatenate(
        [np.full(len(i), d.domain_index) for d, i in zip(sources, train_idx)]
    )
    x_val = np.concatenate([d.x[i] for d, i in zip(sources, val_idx)])
    y_val = np.concatenate([d.y[i] for d, i in zip(sources, val_idx)])
    if x_train.shape[0] == 0:
        raise EmptyDatasetError("no training samples after the validation split")

    rng = np.random.default_rng(np.random.SeedSequence(entropy=config.seed, spawn_key=(23,)))
    consumed: dict[int, int] = {}
    metrics: list[EpochMetrics] = []
    for epoch in range(config.epochs):
        try:
            means = run_epoch(
                model,
                x_train,
                y_train,
                dom_train,
                config,
                config.lr_at(epoch),
                rng,
                prompts,
                distribution,
                class_names,
                domain_names,
                consumed,
            )
        except NonFiniteLossError as exc:
            raise NonFiniteLossError(f"epoch {epoch + 1}: {exc}") from None
        src_acc = evaluate(model, x_val, y_val) if x_val.shape[0] else float("nan")
        metrics.append(
            EpochMetrics(
                epoch=epoch + 1,
                l_cls=means["l_cls"],
                l_decouple=means["l_decouple"],
                l_semantic=means["l_semantic"],
                l_approx=means["l_approx"],
                total=means["total"],
                src_acc=src_acc,
                lodo_acc=evaluate_lodo(model, held),
            )
        )
    return TrainResult(
        model=model,
        metrics=metrics,
        held_out=held_out,
        domain_names=domain_names,
        class_names=list(class_names),
        consumed_domains=frozenset(consumed),
        consumed_counts=consumed,
    )


def erm_config(config: TrainConfig) -> TrainConfig:
    """The same schedule with every regularizer switched off."""
    return replace(config, weights=LossWeights(alpha=0.0, beta=0.0))


def metrics_csv(metrics: Sequence[EpochMetrics]) -> str:
    """Render the epoch log in the fixed metrics column order."""
    from .embeddings import format_float

    lines = ["epoch,l_cls,l_decouple,l_semantic,l_approx,total,src_acc,lodo_acc"]
    for m in metrics:
        lines.append(
            ",".join(
                [str(m.epoch)]
                + [
                    format_float(v)
                    for v in (
                        m.l_cls,
                        m.l_decouple,
                        m.l_semantic,
                        m.l_approx,
                        m.total,
                        m.src_acc,
                        m.lodo_acc,
                    )
                ]
            )
        )
    return "\n".join(lines) + "\n"


def make_pseudo_prompts(
    domain_names: Sequence[str], class_names: Sequence[str], k: int
) -> PromptEmbeddings:
    """Hash-derived stand-in prompt embeddings for all names."""
    return pseudo_prompt_table(domain_names, class_names, k)

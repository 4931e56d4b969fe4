"""The combined training objective and a finite-difference gradient checker."""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .base import FeatureBatch, LossValue, LossWeights, log_softmax, softmax
from .decouple import ProjectionHead, decouple_loss
from .embeddings import PromptEmbeddings
from .exceptions import DimensionMismatchError, NonFiniteLossError
from .lowrank import approximate_loss
from .semantics import SemanticDistribution, semantic_loss
from .validation import as_labels, as_matrix


def classification_loss(logits, labels) -> LossValue:
    """Mean cross-entropy over the batch, gradient with respect to logits."""
    z = as_matrix(logits, "logits")
    y = as_labels(labels, z.shape[1])
    if y.shape[0] != z.shape[0]:
        raise DimensionMismatchError(f"{z.shape[0]} logit rows but {y.shape[0]} labels")
    m = z.shape[0]
    logf = log_softmax(z)
    value = float(-logf[np.arange(m), y].mean())
    grad = softmax(z)
    grad[np.arange(m), y] -= 1.0
    grad /= m
    return LossValue(value=value, grad_logits=grad)


def total_loss(
    batch: FeatureBatch,
    logits,
    prompts: PromptEmbeddings,
    head: ProjectionHead,
    distribution: SemanticDistribution,
    weights: LossWeights,
    class_names: Sequence[str],
    domain_names: Sequence[str],
    style_mode: str = "squared_cosine",
) -> LossValue:
    """cls + alpha * (decouple + semantic) + beta * approximate.

    ``grad_logits`` combines the classification and semantic terms;
    ``grad_features`` combines the decouple and low-rank terms;
    ``grad_params`` is the (weighted) projection-head gradient.  Component
    values land in ``diagnostics`` under ``l_cls``, ``l_decouple``,
    ``l_semantic`` and ``l_approximate``, so
    ``l_cls + alpha * (l_decouple + l_semantic) + beta * l_approximate``
    reproduces ``value`` exactly.
    """
    cls = classification_loss(logits, batch.labels)
    dec = decouple_loss(batch, prompts, head, class_names, domain_names, style_mode)
    sem = semantic_loss(distribution, logits, batch.labels)
    approx = approximate_loss(batch)

    a, b = weights.alpha, weights.beta
    value = cls.value + a * (dec.value + sem.value) + b * approx.value
    if not np.isfinite(value):
        raise NonFiniteLossError("total loss is not finite")
    grad_logits = cls.grad_logits + a * sem.grad_logits
    grad_features = a * dec.grad_features + b * approx.grad_features
    grad_params = a * dec.grad_params

    diagnostics = {
        "l_cls": cls.value,
        "l_decouple": dec.value,
        "l_semantic": sem.value,
        "l_approximate": approx.value,
        "alpha": a,
        "beta": b,
    }
    for prefix, part in (("decouple", dec), ("semantic", sem), ("approximate", approx)):
        for key, val in part.diagnostics.items():
            diagnostics[f"{prefix}.{key}"] = val
    return LossValue(
        value=value,
        grad_features=grad_features,
        grad_logits=grad_logits,
        grad_params=grad_params,
        diagnostics=diagnostics,
    )


def grad_check(
    loss_fn: Callable[[np.ndarray], tuple[float, np.ndarray]],
    point: np.ndarray,
    step: float = 1e-6,
    seed: int | None = None,
    max_coords: int | None = None,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    ``loss_fn(x)`` must return ``(value, gradient)`` with the gradient shaped
    like ``x``.  Every coordinate is probed unless ``max_coords`` caps the
    count, in which case a ``seed``-determined subset is used.  The relative
    error denominator is ``max(|analytic|, |numeric|, 1e-8)``.
    """
    x = np.asarray(point, dtype=np.float64)
    value, grad = loss_fn(x)
    grad = np.asarray(grad, dtype=np.float64)
    if grad.shape != x.shape:
        raise DimensionMismatchError(
            f"gradient shape {grad.shape} does not match point shape {x.shape}"
        )
    if not np.isfinite(value) or not np.all(np.isfinite(grad)):
        raise NonFiniteLossError("loss_fn returned non-finite values at the base point")

    flat = x.ravel()
    coords = np.arange(flat.size)
    if max_coords is not None and max_coords < flat.size:
        rng = np.random.default_rng(seed)
        coords = rng.choice(flat.size, size=max_coords, replace=False)

    worst = 0.0
    for idx in coords:
        bumped = flat.copy()
        bumped[idx] += step
        up, _ = loss_fn(bumped.reshape(x.shape))
        bumped[idx] -= 2.0 * step
        down, _ = loss_fn(bumped.reshape(x.shape))
        if not (np.isfinite(up) and np.isfinite(down)):
            raise NonFiniteLossError(f"loss_fn non-finite near coordinate {idx}")
        numeric = (up - down) / (2.0 * step)
        analytic = grad.ravel()[idx]
        err = abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-8)
        worst = max(worst, err)
    return worst

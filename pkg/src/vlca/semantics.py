"""Interclass similarity, soft label distributions, and the KL loss.

Pipeline: pairwise cosines between class word vectors -> clamp below at a
small positive floor and row-normalize into a row-stochastic matrix ``P`` ->
penalize the KL divergence between ``P[label]`` and the classifier's softmax
on each sample.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .base import LossValue, log_softmax, softmax
from .exceptions import DimensionMismatchError, ZeroVectorError
from .validation import as_labels, as_matrix

#: Lower clamp applied to cosine similarities before row normalization.
#: Keeps every probability strictly positive so the KL term stays finite.
SIMILARITY_FLOOR = 1e-6


@dataclass(frozen=True)
class SimilarityMatrix:
    """Symmetric matrix of pairwise cosine similarities, unit diagonal."""

    values: np.ndarray

    def __post_init__(self) -> None:
        v = as_matrix(self.values, "similarity values")
        c = v.shape[0]
        if v.shape != (c, c) or c < 1:
            raise DimensionMismatchError(f"similarity matrix must be square, got {v.shape}")
        if not np.allclose(v, v.T, atol=1e-12, rtol=0.0):
            raise ValueError("similarity matrix must be symmetric")
        if not np.allclose(np.diag(v), 1.0, atol=1e-12, rtol=0.0):
            raise ValueError("similarity diagonal must be 1")
        if v.min() < -1.0 or v.max() > 1.0:
            raise ValueError("similarities must lie in [-1, 1]")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def num_classes(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class SemanticDistribution:
    """Row-stochastic soft-label matrix: row k is the target distribution for
    samples of class k."""

    probabilities: np.ndarray

    def __post_init__(self) -> None:
        p = as_matrix(self.probabilities, "probabilities")
        c = p.shape[0]
        if p.shape != (c, c) or c < 1:
            raise DimensionMismatchError(f"distribution must be square, got {p.shape}")
        if p.min() <= 0.0:
            raise ValueError("probabilities must be strictly positive")
        if not np.allclose(p.sum(axis=1), 1.0, atol=1e-9, rtol=0.0):
            raise ValueError("rows must sum to 1")
        p.flags.writeable = False
        object.__setattr__(self, "probabilities", p)

    @property
    def num_classes(self) -> int:
        return self.probabilities.shape[0]


def build_similarity(vectors) -> SimilarityMatrix:
    """Pairwise cosine similarities of class vectors (rows of ``vectors``)."""
    v = as_matrix(vectors, "class vectors")
    norms = np.linalg.norm(v, axis=1)
    if np.any(norms == 0.0):
        bad = int(np.flatnonzero(norms == 0.0)[0])
        raise ZeroVectorError(f"class vector {bad} has zero norm")
    unit = v / norms[:, None]
    sims = np.clip(unit @ unit.T, -1.0, 1.0)
    np.fill_diagonal(sims, 1.0)
    # exact symmetry despite floating-point matmul asymmetries
    sims = (sims + sims.T) / 2.0
    return SimilarityMatrix(values=sims)


def build_distribution(similarity: SimilarityMatrix) -> SemanticDistribution:
    """Clamp similarities below at :data:`SIMILARITY_FLOOR`, normalize rows.

    The clamp only matters for non-positive cosines; with all-positive
    similarities the result is a plain row normalization.
    """
    clamped = np.maximum(similarity.values, SIMILARITY_FLOOR)
    probs = clamped / clamped.sum(axis=1, keepdims=True)
    return SemanticDistribution(probabilities=probs)


def semantic_loss(
    distribution: SemanticDistribution, logits, labels
) -> LossValue:
    """Summed KL(P[label] || softmax(logits)) over the batch.

    Returns the loss with its gradient with respect to the logits,
    ``softmax(logits) - P[label]`` per row.
    """
    c = distribution.num_classes
    z = as_matrix(logits, "logits")
    if z.shape[1] != c:
        raise DimensionMismatchError(
            f"logits have {z.shape[1]} columns, distribution has {c} classes"
        )
    y = as_labels(labels, c)
    if y.shape[0] != z.shape[0]:
        raise DimensionMismatchError(
            f"{z.shape[0]} logit rows but {y.shape[0]} labels"
        )
    targets = distribution.probabilities[y]
    logf = log_softmax(z)
    # P log(P/f), with the 0 log 0 = 0 convention (P is strictly positive
    # here, but keep the guard so the formula is safe on any valid input)
    with np.errstate(divide="ignore", invalid="ignore"):
        plogp = np.where(targets > 0.0, targets * np.log(targets), 0.0)
    value = float((plogp - targets * logf).sum())
    grad_logits = softmax(z) - targets
    return LossValue(
        value=value,
        grad_logits=grad_logits,
        diagnostics={"mean_kl": value / z.shape[0]},
    )

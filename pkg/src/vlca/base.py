"""Shared value types: feature batches, loss results, loss weights."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import DimensionMismatchError, EmptyDatasetError
from .validation import as_matrix


@dataclass
class FeatureBatch:
    """A batch of feature rows with class and domain indices.

    ``features`` is ``(m, n)``; ``labels`` and ``domains`` are length ``m``
    arrays of non-negative integers.  Range checks against the number of
    classes / domains happen where those counts are known.
    """

    features: np.ndarray
    labels: np.ndarray
    domains: np.ndarray

    def __post_init__(self) -> None:
        self.features = as_matrix(self.features, "features")
        self.labels = np.asarray(self.labels, dtype=np.int64)
        self.domains = np.asarray(self.domains, dtype=np.int64)
        m = self.features.shape[0]
        if m < 1:
            raise EmptyDatasetError("a feature batch needs at least one row")
        if self.labels.shape != (m,) or self.domains.shape != (m,):
            raise DimensionMismatchError(
                f"labels/domains must both have shape ({m},), got "
                f"{self.labels.shape} and {self.domains.shape}"
            )
        if self.labels.size and self.labels.min() < 0:
            raise DimensionMismatchError("labels must be non-negative")
        if self.domains.size and self.domains.min() < 0:
            raise DimensionMismatchError("domains must be non-negative")

    @property
    def num_samples(self) -> int:
        return self.features.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.features.shape[1]


@dataclass
class LossValue:
    """A scalar loss plus the gradients a training step needs.

    ``grad_features`` is the gradient with respect to the loss's feature-matrix
    input, ``grad_logits`` with respect to classifier logits (only for losses
    that consume logits), and ``grad_params`` with respect to any trainable
    parameters of the loss itself, flattened.  ``diagnostics`` carries named
    scalars (component values, skip counts, ranks).
    """

    value: float
    grad_features: np.ndarray | None = None
    grad_logits: np.ndarray | None = None
    grad_params: np.ndarray | None = None
    diagnostics: dict[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class LossWeights:
    """Scalar weights for the regularization terms of the total objective."""

    alpha: float = 0.2
    beta: float = 0.2

    def __post_init__(self) -> None:
        for name in ("alpha", "beta"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {v!r}")


def log_softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise log-softmax, stabilized by subtracting the row max."""
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def softmax(logits: np.ndarray) -> np.ndarray:
    return np.exp(log_softmax(logits))

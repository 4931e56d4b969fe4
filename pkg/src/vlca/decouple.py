"""Style suppression and semantic alignment in prompt-embedding space.

Features are mapped through a linear projection head into the space of the
prompt embeddings.  There each sample is pushed to be orthogonal to its
domain's style vector and parallel to its class's semantic vector.

Two style penalties are available:

* ``squared_cosine`` (default): cos^2 between the projected feature and the
  style vector — scale-invariant in both arguments and bounded.
* ``raw_dot``: the raw inner product, kept as a compatibility mode; it is
  scale-sensitive, so the default is preferred for training.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .base import FeatureBatch, LossValue
from .embeddings import PromptEmbeddings
from .exceptions import DimensionMismatchError, LabelOutOfRangeError, ZeroVectorError
from .validation import as_vector

STYLE_MODES = ("squared_cosine", "raw_dot")

#: Projected rows with norm below this are excluded from the cosine terms.
NORM_EPS = 1e-12


@dataclass
class ProjectionHead:
    """Trainable linear map from feature space (n) to prompt space (k)."""

    weight: np.ndarray

    def __post_init__(self) -> None:
        w = np.asarray(self.weight, dtype=np.float64)
        if w.ndim != 2:
            raise DimensionMismatchError(f"head weight must be 2-D, got ndim={w.ndim}")
        self.weight = w

    @classmethod
    def identity(cls, n: int) -> "ProjectionHead":
        return cls(weight=np.eye(n))

    @classmethod
    def random(cls, k: int, n: int, seed: int = 0) -> "ProjectionHead":
        """Identity when square, otherwise a small random map."""
        if k == n:
            return cls.identity(n)
        rng = np.random.default_rng(seed)
        scale = 1.0 / np.sqrt(n)
        return cls(weight=rng.uniform(-scale, scale, size=(k, n)))

    @property
    def k(self) -> int:
        return self.weight.shape[0]

    @property
    def n(self) -> int:
        return self.weight.shape[1]

    def __call__(self, features: np.ndarray) -> np.ndarray:
        return features @ self.weight.T


def project(v, e) -> np.ndarray:
    """Orthogonal projection of ``v`` onto the line spanned by ``e``."""
    v = as_vector(v, "v")
    e = as_vector(e, "e")
    if v.shape != e.shape:
        raise DimensionMismatchError(f"shape mismatch {v.shape} vs {e.shape}")
    ee = float(e @ e)
    if not ee > 0.0:
        raise ZeroVectorError("cannot project onto a zero vector")
    return (float(v @ e) / ee) * e


def decouple_loss(
    batch: FeatureBatch,
    prompts: PromptEmbeddings,
    head: ProjectionHead,
    class_names: Sequence[str],
    domain_names: Sequence[str],
    style_mode: str = "squared_cosine",
) -> LossValue:
    """Batch-mean style + alignment penalty, with gradients.

    Per sample, with G = head(F): the style term (cos^2(G, style) or the raw
    inner product <G, style>) plus the alignment term 1 - cos(G, semantic).
    Rows whose projection norm falls below :data:`NORM_EPS` are skipped for
    the cosine-based terms and counted in ``diagnostics["skipped"]``.

    Returns gradients with respect to the features and (flattened) head
    weight.
    """
    if style_mode not in STYLE_MODES:
        raise ValueError(f"style_mode must be one of {STYLE_MODES}, got {style_mode!r}")
    F = batch.features
    m, n = F.shape
    if head.n != n:
        raise DimensionMismatchError(
            f"head maps {head.n}-dim features but batch has {n}-dim features"
        )
    if head.k != prompts.k:
        raise DimensionMismatchError(
            f"head output dim {head.k} != prompt dim {prompts.k}"
        )
    if batch.labels.max() >= len(class_names):
        raise LabelOutOfRangeError(
            f"label {int(batch.labels.max())} has no entry in class_names"
        )
    if batch.domains.max() >= len(domain_names):
        raise LabelOutOfRangeError(
            f"domain {int(batch.domains.max())} has no entry in domain_names"
        )

    style_bank = np.stack([prompts.style_vector(d) for d in domain_names])
    sem_bank = np.stack([prompts.semantic_vector(c) for c in class_names])
    S = style_bank[batch.domains]  # (m, k)
    C = sem_bank[batch.labels]  # (m, k)

    G = head(F)  # (m, k)
    gnorm = np.linalg.norm(G, axis=1)
    snorm = np.linalg.norm(S, axis=1)
    cnorm = np.linalg.norm(C, axis=1)
    active = gnorm >= NORM_EPS
    g_safe = np.where(active, gnorm, 1.0)

    gs = np.einsum("ij,ij->i", G, S)
    gc = np.einsum("ij,ij->i", G, C)

    grad_G = np.zeros_like(G)
    if style_mode == "raw_dot":
        style_terms = gs
        grad_G += S
    else:
        u = np.where(active, gs / (g_safe * snorm), 0.0)
        style_terms = np.where(active, u * u, 0.0)
        du = S / (g_safe * snorm)[:, None] - (u / g_safe**2)[:, None] * G
        grad_G += np.where(active[:, None], 2.0 * u[:, None] * du, 0.0)

    cosv = np.where(active, gc / (g_safe * cnorm), 0.0)
    align_terms = np.where(active, 1.0 - cosv, 0.0)
    dalign = -(C / (g_safe * cnorm)[:, None] - (cosv / g_safe**2)[:, None] * G)
    grad_G += np.where(active[:, None], dalign, 0.0)

    per_sample = style_terms + align_terms
    value = float(per_sample.mean())
    grad_features = (grad_G @ head.weight) / m
    grad_weight = (grad_G.T @ F) / m
    return LossValue(
        value=value,
        grad_features=grad_features,
        grad_params=grad_weight.ravel(),
        diagnostics={
            "style_term": float(style_terms.mean()),
            "align_term": float(align_terms.mean()),
            "skipped": float(np.count_nonzero(~active)),
        },
    )

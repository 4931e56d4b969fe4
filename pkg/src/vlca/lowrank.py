"""Per-class low-rank pressure on feature batches.

Rows sharing a class label are stacked into a matrix; the surrogate
``sum(sigma)/sigma_1 - 1`` is zero exactly when the stack is rank one, so
minimizing it pulls every class's features toward a single direction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .base import FeatureBatch, LossValue
from .exceptions import ConvergenceFailureError, DimensionMismatchError
from .validation import as_matrix

#: Below this, the leading singular value is treated as zero and the
#: surrogate is skipped (flagged in diagnostics) instead of divided by ~0.
DEGENERATE_EPS = 1e-10

#: Relative cutoff for counting numerically nonzero singular values.
RANK_REL_TOL = 1e-10


@dataclass(frozen=True)
class SvdFactors:
    """Thin SVD ``M = U diag(sigma) V^T`` with orthonormal columns."""

    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray

    def __post_init__(self) -> None:
        r = self.sigma.shape[0]
        if self.u.shape[1] != r or self.v.shape[1] != r:
            raise DimensionMismatchError(
                f"inconsistent factor shapes {self.u.shape}, {self.sigma.shape}, {self.v.shape}"
            )
        if np.any(self.sigma < 0) or np.any(np.diff(self.sigma) > 0):
            raise ValueError("singular values must be nonnegative and nonincreasing")
        for name, mat in (("u", self.u), ("v", self.v)):
            gram = mat.T @ mat
            if not np.allclose(gram, np.eye(r), atol=1e-8, rtol=0.0):
                raise ValueError(f"columns of {name} are not orthonormal")

    def reconstruct(self) -> np.ndarray:
        return (self.u * self.sigma) @ self.v.T


def svd(matrix) -> SvdFactors:
    """Thin SVD via LAPACK, wrapped in :class:`SvdFactors`."""
    m = as_matrix(matrix, "matrix")
    try:
        u, s, vt = np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailureError(f"SVD did not converge: {exc}") from exc
    return SvdFactors(u=u, sigma=s, v=vt.T)


def group_by_label(batch: FeatureBatch) -> list[tuple[int, np.ndarray]]:
    """Split a batch's feature rows by class label.

    Returns ``(label, rows)`` pairs with labels ascending and each group's
    rows in their original batch order.
    """
    out = []
    for label in np.unique(batch.labels):
        out.append((int(label), batch.features[batch.labels == label]))
    return out


def rank_surrogate(matrix) -> LossValue:
    """``sum(sigma)/sigma_1 - 1`` with its gradient.

    Zero iff the matrix is (numerically) rank one.  The gradient follows from
    ``d sigma_i = u_i^T dM v_i``: weight ``(sigma_1 - sum(sigma)) / sigma_1^2``
    on the leading singular direction and ``1/sigma_1`` on the rest.  When
    ``sigma_1`` is below :data:`DEGENERATE_EPS` the loss is skipped: value 0,
    zero gradient, ``diagnostics["degenerate"] = 1``.
    """
    m = as_matrix(matrix, "matrix")
    factors = svd(m)
    s = factors.sigma
    s1 = float(s[0]) if s.size else 0.0
    if s1 <= DEGENERATE_EPS:
        return LossValue(
            value=0.0,
            grad_features=np.zeros_like(m),
            diagnostics={"degenerate": 1.0, "effective_rank": 0.0, "sigma_max": s1},
        )
    total = float(s.sum())
    value = total / s1 - 1.0
    weights = np.full(s.shape, 1.0 / s1)
    weights[0] = (s1 - total) / (s1 * s1)
    grad = (factors.u * weights) @ factors.v.T
    effective_rank = float(np.count_nonzero(s > RANK_REL_TOL * s1))
    return LossValue(
        value=value,
        grad_features=grad,
        diagnostics={
            "degenerate": 0.0,
            "effective_rank": effective_rank,
            "sigma_max": s1,
        },
    )


def approximate_loss(batch: FeatureBatch) -> LossValue:
    """Mean rank surrogate over label groups with at least two rows.

    Groups with a single row are always rank one and are skipped; the mean
    runs over the eligible groups only, so the magnitude does not depend on
    how many singletons a batch happens to contain.  With no eligible group
    the loss is 0 with zero gradient.
    """
    F = batch.features
    grad = np.zeros_like(F)
    diagnostics: dict[str, float] = {}
    values = []
    for label, rows in group_by_label(batch):
        if rows.shape[0] < 2:
            continue
        part = rank_surrogate(rows)
        values.append(part.value)
        diagnostics[f"rank_class_{label}"] = part.diagnostics["effective_rank"]
        if part.diagnostics.get("degenerate"):
            diagnostics["degenerate_groups"] = (
                diagnostics.get("degenerate_groups", 0.0) + 1.0
            )
        mask = batch.labels == label
        grad[mask] = part.grad_features
    diagnostics["eligible_groups"] = float(len(values))
    if not values:
        return LossValue(value=0.0, grad_features=grad, diagnostics=diagnostics)
    value = float(np.mean(values))
    grad /= len(values)
    return LossValue(value=value, grad_features=grad, diagnostics=diagnostics)

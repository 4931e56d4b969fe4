"""Seeded finite-difference verification suites for every analytic gradient.

Each suite draws random instances, compares the analytic gradient against
central differences via :func:`vlca.objective.grad_check`, and reports the
worst relative error.  The CLI ``gradcheck`` subcommand and the test suite
both run these.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .base import FeatureBatch, LossWeights
from .decouple import ProjectionHead, decouple_loss
from .embeddings import pseudo_prompt_table
from .lowrank import rank_surrogate
from .objective import grad_check, total_loss
from .semantics import SemanticDistribution, semantic_loss

#: Thresholds on the max relative gradient error, per loss.
THRESHOLDS = {
    "semantic": 1e-6,
    "decouple": 1e-5,
    "rank_surrogate": 1e-4,
    "total": 1e-5,
}


@dataclass
class CheckReport:
    name: str
    max_error: float
    threshold: float
    instances: int

    @property
    def passed(self) -> bool:
        return self.max_error < self.threshold


def _random_distribution(rng: np.random.Generator, c: int) -> SemanticDistribution:
    p = rng.uniform(0.05, 1.0, size=(c, c))
    return SemanticDistribution(probabilities=p / p.sum(axis=1, keepdims=True))


def _gapped_singular_matrix(rng: np.random.Generator, p: int, q: int) -> np.ndarray:
    """A matrix with well-separated singular values (gaps > 1e-3)."""
    r = min(p, q)
    u, _ = np.linalg.qr(rng.standard_normal((p, r)))
    v, _ = np.linalg.qr(rng.standard_normal((q, r)))
    sigma = np.sort(rng.uniform(0.5, 4.0, size=r))[::-1]
    while np.any(-np.diff(sigma) < 1e-2):
        sigma = np.sort(rng.uniform(0.5, 4.0, size=r))[::-1]
    return (u * sigma) @ v.T


def check_semantic(seed: int, instances: int) -> CheckReport:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(instances):
        # Redraw instances with a near-vanishing gradient entry: the relative
        # error on such a coordinate is dominated by the eps * |loss| / (2h)
        # value-rounding floor, not by the gradient under test (see
        # check_total).  The 1e-6 threshold here needs entries >~ 1e-3.
        for _attempt in range(50):
            m, c = int(rng.integers(2, 7)), int(rng.integers(2, 6))
            dist = _random_distribution(rng, c)
            labels = rng.integers(0, c, size=m)
            logits = rng.standard_normal((m, c))
            base = semantic_loss(dist, logits, labels)
            if np.abs(base.grad_logits).min() >= 1e-3:
                break

        def fn(z, dist=dist, labels=labels):
            out = semantic_loss(dist, z, labels)
            return out.value, out.grad_logits

        # the loss is a batch sum, so |f| reaches O(10); a 1e-5 step keeps
        # the (|f| * eps / 2h) cancellation noise under the truncation error
        worst = max(worst, grad_check(fn, logits, step=1e-5))
    return CheckReport("semantic", worst, THRESHOLDS["semantic"], instances)


def check_decouple(seed: int, instances: int, style_mode: str = "squared_cosine") -> CheckReport:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(instances):
        # Same near-vanishing-entry redraw as the other suites (see
        # check_total); 1e-4 is enough headroom for the 1e-5 threshold.
        for _attempt in range(50):
            m, n, k = int(rng.integers(2, 6)), int(rng.integers(2, 6)), int(rng.integers(2, 6))
            n_classes, n_domains = int(rng.integers(2, 4)), int(rng.integers(2, 4))
            class_names = [f"c{i}" for i in range(n_classes)]
            domain_names = [f"d{i}" for i in range(n_domains)]
            prompts = pseudo_prompt_table(domain_names, class_names, k)
            head = ProjectionHead(weight=rng.standard_normal((k, n)))
            labels = rng.integers(0, n_classes, size=m)
            domains = rng.integers(0, n_domains, size=m)
            F = rng.standard_normal((m, n)) + 0.5  # keep projections well away from 0
            base = decouple_loss(
                FeatureBatch(features=F, labels=labels, domains=domains),
                prompts, head, class_names, domain_names, style_mode,
            )
            smallest = min(
                np.abs(base.grad_features).min(), np.abs(base.grad_params).min()
            )
            if smallest >= 1e-4:
                break

        def fn_features(f, labels=labels, domains=domains, head=head):
            batch = FeatureBatch(features=f, labels=labels, domains=domains)
            out = decouple_loss(batch, prompts, head, class_names, domain_names, style_mode)
            return out.value, out.grad_features

        worst = max(worst, grad_check(fn_features, F, step=1e-5))

        batch = FeatureBatch(features=F, labels=labels, domains=domains)

        def fn_weight(w, batch=batch):
            h = ProjectionHead(weight=w.reshape(k, n))
            out = decouple_loss(batch, prompts, h, class_names, domain_names, style_mode)
            return out.value, out.grad_params.reshape(k, n)

        worst = max(worst, grad_check(fn_weight, head.weight, step=1e-5))
    return CheckReport("decouple", worst, THRESHOLDS["decouple"], instances)


def check_rank_surrogate(seed: int, instances: int) -> CheckReport:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(instances):
        # Gap control handles curvature; the near-vanishing-entry redraw
        # (see check_total) handles the roundoff floor on tiny coordinates.
        for _attempt in range(50):
            p, q = int(rng.integers(2, 7)), int(rng.integers(2, 7))
            m = _gapped_singular_matrix(rng, p, q)
            if np.abs(rank_surrogate(m).grad_features).min() >= 1e-4:
                break

        def fn(a):
            out = rank_surrogate(a)
            return out.value, out.grad_features

        worst = max(worst, grad_check(fn, m, step=1e-6))
    return CheckReport("rank_surrogate", worst, THRESHOLDS["rank_surrogate"], instances)


def check_total(seed: int, instances: int) -> CheckReport:
    """Joint check of the combined objective against finite differences.

    Perturbs the feature matrix and the logits independently.  Labels are
    drawn so each class group has either two rows or one (singletons are
    skipped by the low-rank term, so both paths get exercised).
    """
    rng = np.random.default_rng(seed)
    weights = LossWeights(alpha=0.2, beta=0.2)
    worst = 0.0
    for _ in range(instances):
        # Central differences read each coordinate against a value-rounding
        # noise floor of order eps * |loss| / (2 * step).  A gradient entry
        # whose true magnitude sits near that floor cannot meet a relative
        # tolerance at any step, so draws with a near-vanishing entry (an
        # accidental cancellation between terms) are redrawn — same spirit
        # as the repeated-singular-value redraw in the rank suite.
        for _attempt in range(50):
            n, k = int(rng.integers(3, 6)), int(rng.integers(2, 5))
            n_classes, n_domains = int(rng.integers(2, 4)), 2
            class_names = [f"c{i}" for i in range(n_classes)]
            domain_names = [f"d{i}" for i in range(n_domains)]
            prompts = pseudo_prompt_table(domain_names, class_names, k)
            head = ProjectionHead(weight=rng.standard_normal((k, n)))
            dist = _random_distribution(rng, n_classes)
            # two rows for some classes, one for others
            labels = np.concatenate(
                [np.repeat(np.arange(n_classes), 2), rng.integers(0, n_classes, size=1)]
            )
            m = labels.size
            domains = rng.integers(0, n_domains, size=m)
            F = rng.standard_normal((m, n)) + 0.5
            logits = rng.standard_normal((m, n_classes))
            base = total_loss(
                FeatureBatch(features=F, labels=labels, domains=domains),
                logits, prompts, head, dist, weights, class_names, domain_names,
            )
            smallest = min(
                np.abs(base.grad_features).min(), np.abs(base.grad_logits).min()
            )
            if smallest >= 1e-4:
                break

        def fn_features(f, logits=logits, labels=labels, domains=domains):
            batch = FeatureBatch(features=f, labels=labels, domains=domains)
            out = total_loss(
                batch, logits, prompts, head, dist, weights, class_names, domain_names
            )
            return out.value, out.grad_features

        def fn_logits(z, F=F, labels=labels, domains=domains):
            batch = FeatureBatch(features=F, labels=labels, domains=domains)
            out = total_loss(
                batch, z, prompts, head, dist, weights, class_names, domain_names
            )
            return out.value, out.grad_logits

        # the combined value is an order of magnitude larger than any single
        # term (the semantic part is a batch sum), so the cancellation noise
        # floor sits higher; 1e-5 balances roundoff against truncation here
        worst = max(worst, grad_check(fn_features, F, step=1e-5))
        worst = max(worst, grad_check(fn_logits, logits, step=1e-5))
    return CheckReport("total", worst, THRESHOLDS["total"], instances)


def run_all(seed: int, instances: int = 20) -> list[CheckReport]:
    """All gradient suites (both decouple modes fold into one report)."""
    sq = check_decouple(seed, instances, "squared_cosine")
    raw = check_decouple(seed + 1, instances, "raw_dot")
    decouple = CheckReport(
        "decouple", max(sq.max_error, raw.max_error), THRESHOLDS["decouple"], 2 * instances
    )
    return [
        check_semantic(seed, instances),
        decouple,
        check_rank_surrogate(seed, instances),
        check_total(seed, instances),
    ]

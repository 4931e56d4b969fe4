"""A scikit-learn style estimator facade over the trainer.

``DecoupledClassifier`` follows the usual conventions: constructor only
stores hyperparameters, ``fit(X, y)`` learns and returns ``self``, learned
state lands in trailing-underscore attributes, and ``get_params`` /
``set_params`` work for grid search.  Domain indices ride along through the
optional ``domains`` fit parameter; without them, all samples share one
domain and the style term degenerates gracefully.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import NotFittedError
from sklearn.utils.validation import check_array, check_X_y

from .base import LossWeights, softmax
from .datasets import DEFAULT_CLASS_NAMES, DEFAULT_DOMAIN_NAMES, default_names
from .embeddings import pseudo_prompt_table
from .exceptions import DimensionMismatchError
from .model import Model, ModelDims
from .trainer import TrainConfig, default_distribution, run_epoch


class DecoupledClassifier(BaseEstimator, ClassifierMixin):
    """Feedforward classifier trained with the decoupling regularizers.

    Parameters mirror :class:`~vlca.trainer.TrainConfig` plus the model
    sizes.  ``alpha`` weights the style/semantic terms, ``beta`` the
    per-class low-rank term; both at zero give a plain ERM baseline.
    """

    def __init__(
        self,
        hidden_dim: int = 32,
        feature_dim: int = 16,
        head_dim: int | None = None,
        epochs: int = 50,
        batch_size: int = 16,
        lr: float = 1e-3,
        lr_decay_factor: float = 0.1,
        lr_decay_epoch: int = 40,
        weight_decay: float = 5e-4,
        alpha: float = 0.2,
        beta: float = 0.2,
        style_mode: str = "squared_cosine",
        seed: int = 0,
    ):
        self.hidden_dim = hidden_dim
        self.feature_dim = feature_dim
        self.head_dim = head_dim
        self.epochs = epochs
        self.batch_size = batch_size
        self.lr = lr
        self.lr_decay_factor = lr_decay_factor
        self.lr_decay_epoch = lr_decay_epoch
        self.weight_decay = weight_decay
        self.alpha = alpha
        self.beta = beta
        self.style_mode = style_mode
        self.seed = seed

    def _train_config(self) -> TrainConfig:
        return TrainConfig(
            epochs=self.epochs,
            batch_size=self.batch_size,
            lr=self.lr,
            lr_decay_factor=self.lr_decay_factor,
            lr_decay_epoch=self.lr_decay_epoch,
            weight_decay=self.weight_decay,
            weights=LossWeights(alpha=self.alpha, beta=self.beta),
            style_mode=self.style_mode,
            seed=self.seed,
        )

    def fit(self, X, y, domains=None):
        X, y = check_X_y(X, y)
        self.classes_, y_idx = np.unique(y, return_inverse=True)
        if len(self.classes_) < 2:
            raise ValueError("need at least two classes")
        if domains is None:
            dom = np.zeros(X.shape[0], dtype=np.int64)
        else:
            dom = np.asarray(domains, dtype=np.int64)
            if dom.shape != (X.shape[0],):
                raise DimensionMismatchError(
                    f"domains must have shape ({X.shape[0]},), got {dom.shape}"
                )
            if dom.min() < 0:
                raise ValueError("domain indices must be non-negative")
        self.n_features_in_ = X.shape[1]

        config = self._train_config()
        num_classes = len(self.classes_)
        num_domains = int(dom.max()) + 1
        head_dim = self.head_dim if self.head_dim is not None else self.feature_dim
        dims = ModelDims(
            input_dim=self.n_features_in_,
            hidden_dim=self.hidden_dim,
            feature_dim=self.feature_dim,
            num_classes=num_classes,
            head_dim=head_dim,
        )
        model = Model(dims, seed=self.seed)
        class_names = default_names(num_classes, DEFAULT_CLASS_NAMES, "class")
        domain_names = default_names(num_domains, DEFAULT_DOMAIN_NAMES, "domain")
        prompts = pseudo_prompt_table(domain_names, class_names, head_dim)
        distribution = default_distribution(prompts, class_names)

        rng = np.random.default_rng(
            np.random.SeedSequence(entropy=self.seed, spawn_key=(23,))
        )
        history = []
        for epoch in range(config.epochs):
            means = run_epoch(
                model,
                X.astype(np.float64),
                y_idx,
                dom,
                config,
                config.lr_at(epoch),
                rng,
                prompts,
                distribution,
                class_names,
                domain_names,
            )
            history.append(means)
        self.model_ = model
        self.history_ = history
        return self

    def _check_fitted(self) -> None:
        if not hasattr(self, "model_"):
            raise NotFittedError(
                "this DecoupledClassifier instance is not fitted yet; call fit first"
            )

    def decision_function(self, X) -> np.ndarray:
        self._check_fitted()
        X = check_array(X)
        return self.model_.logits(X.astype(np.float64))

    def predict_proba(self, X) -> np.ndarray:
        return softmax(self.decision_function(X))

    def predict(self, X) -> np.ndarray:
        self._check_fitted()
        X = check_array(X)
        idx = self.model_.predict(X.astype(np.float64))
        return self.classes_[idx]

    def transform(self, X) -> np.ndarray:
        """The learned feature representation (before the classifier)."""
        self._check_fitted()
        X = check_array(X)
        return self.model_.features(X.astype(np.float64))

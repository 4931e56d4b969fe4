"""Semantic-supervision losses and a leave-one-domain-out training harness.

The package trains a small feedforward classifier under three extra
penalties: projected features are pushed orthogonal to per-domain style
embeddings and parallel to per-class semantic embeddings; classifier outputs
are pulled toward soft labels built from interclass word-vector similarity;
and each class's feature block is pressed toward rank one through an SVD
surrogate.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .base import FeatureBatch, LossValue, LossWeights
from .datasets import DomainDataset, SynthConfig, generate_synth
from .decouple import ProjectionHead, decouple_loss, project
from .embeddings import (
    EmbeddingTable,
    PromptEmbeddings,
    VocabularyPolicy,
    parse_glove,
    pseudo_prompt_table,
    read_prompt_table,
    resolve_class,
    write_prompt_table,
)
from .estimator import DecoupledClassifier
from .exceptions import VlcaError
from .lowrank import SvdFactors, approximate_loss, group_by_label, rank_surrogate, svd
from .model import Model, ModelDims, load_model, save_model
from .objective import classification_loss, grad_check, total_loss
from .semantics import (
    SemanticDistribution,
    SimilarityMatrix,
    build_distribution,
    build_similarity,
    semantic_loss,
)
from .trainer import TrainConfig, TrainResult, evaluate_lodo, train

__all__ = [
    "__version__",
    "DecoupledClassifier",
    "DomainDataset",
    "EmbeddingTable",
    "FeatureBatch",
    "LossValue",
    "LossWeights",
    "Model",
    "ModelDims",
    "ProjectionHead",
    "PromptEmbeddings",
    "SemanticDistribution",
    "SimilarityMatrix",
    "SvdFactors",
    "SynthConfig",
    "TrainConfig",
    "TrainResult",
    "VlcaError",
    "VocabularyPolicy",
    "approximate_loss",
    "build_distribution",
    "build_similarity",
    "classification_loss",
    "decouple_loss",
    "evaluate_lodo",
    "generate_synth",
    "grad_check",
    "group_by_label",
    "load_model",
    "parse_glove",
    "project",
    "pseudo_prompt_table",
    "rank_surrogate",
    "read_prompt_table",
    "resolve_class",
    "save_model",
    "semantic_loss",
    "svd",
    "total_loss",
    "train",
    "write_prompt_table",
]

"""A small feedforward network: feature extractor, classifier, projection head.

The extractor is two affine layers with tanh nonlinearities; its output is
the feature matrix the regularizers act on.  A linear classifier maps
features to logits and a linear projection head maps them into prompt space.
Parameters live in a plain dict of float64 arrays; updates are vanilla SGD
with decoupled-style weight decay folded into the gradient.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .decouple import ProjectionHead
from .exceptions import BadHeaderError, DimensionMismatchError
from .fileio import atomic_write_bytes

MODEL_MAGIC = b"VLCAMODL"
MODEL_VERSION = 1

#: Parameter names in serialization order.
PARAM_ORDER = ("w1", "b1", "w2", "b2", "wc", "bc", "whead")


@dataclass(frozen=True)
class ModelDims:
    input_dim: int
    hidden_dim: int
    feature_dim: int
    num_classes: int
    head_dim: int

    def __post_init__(self) -> None:
        for name in ("input_dim", "hidden_dim", "feature_dim", "num_classes", "head_dim"):
            if getattr(self, name) < 1:
                raise DimensionMismatchError(f"{name} must be positive")

    def shapes(self) -> dict[str, tuple[int, ...]]:
        return {
            "w1": (self.hidden_dim, self.input_dim),
            "b1": (self.hidden_dim,),
            "w2": (self.feature_dim, self.hidden_dim),
            "b2": (self.feature_dim,),
            "wc": (self.num_classes, self.feature_dim),
            "bc": (self.num_classes,),
            "whead": (self.head_dim, self.feature_dim),
        }


class Model:
    """Extractor (input -> hidden -> feature), classifier, projection head."""

    def __init__(self, dims: ModelDims, seed: int = 0):
        self.dims = dims
        rng = np.random.default_rng(seed)
        self.params: dict[str, np.ndarray] = {}
        for name, shape in dims.shapes().items():
            if name == "whead":
                self.params[name] = ProjectionHead.random(
                    dims.head_dim, dims.feature_dim, seed=seed
                ).weight
            elif name.startswith("b"):
                self.params[name] = np.zeros(shape)
            else:
                bound = 1.0 / np.sqrt(shape[1])
                self.params[name] = rng.uniform(-bound, bound, size=shape)

    @property
    def head(self) -> ProjectionHead:
        return ProjectionHead(weight=self.params["whead"])

    def forward(self, x: np.ndarray) -> dict[str, np.ndarray]:
        """Run the network, returning every intermediate needed by backward."""
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.dims.input_dim:
            raise DimensionMismatchError(
                f"input must be (m, {self.dims.input_dim}), got {x.shape}"
            )
        p = self.params
        h = np.tanh(x @ p["w1"].T + p["b1"])
        f = np.tanh(h @ p["w2"].T + p["b2"])
        logits = f @ p["wc"].T + p["bc"]
        return {"x": x, "h": h, "features": f, "logits": logits}

    def features(self, x: np.ndarray) -> np.ndarray:
        return self.forward(x)["features"]

    def logits(self, x: np.ndarray) -> np.ndarray:
        return self.forward(x)["logits"]

    def predict(self, x: np.ndarray) -> np.ndarray:
        """Class indices; argmax ties resolve to the lower index."""
        return np.argmax(self.logits(x), axis=1)

    def backward(
        self,
        cache: dict[str, np.ndarray],
        grad_logits: np.ndarray,
        grad_features: np.ndarray | None = None,
        grad_head: np.ndarray | None = None,
    ) -> dict[str, np.ndarray]:
        """Backpropagate logit-space and feature-space gradients to parameters.

        ``grad_head`` is the flattened projection-head gradient as produced by
        the decouple term; it is reshaped and reported as the ``whead`` entry.
        """
        p = self.params
        x, h, f = cache["x"], cache["h"], cache["features"]
        grads: dict[str, np.ndarray] = {}
        grads["wc"] = grad_logits.T @ f
        grads["bc"] = grad_logits.sum(axis=0)
        gf = grad_logits @ p["wc"]
        if grad_features is not None:
            gf = gf + grad_features
        gz2 = gf * (1.0 - f * f)
        grads["w2"] = gz2.T @ h
        grads["b2"] = gz2.sum(axis=0)
        gh = gz2 @ p["w2"]
        gz1 = gh * (1.0 - h * h)
        grads["w1"] = gz1.T @ x
        grads["b1"] = gz1.sum(axis=0)
        if grad_head is None:
            grads["whead"] = np.zeros_like(p["whead"])
        else:
            grads["whead"] = np.asarray(grad_head).reshape(p["whead"].shape)
        return grads

    def sgd_step(self, grads: dict[str, np.ndarray], lr: float, weight_decay: float) -> None:
        """``p <- p - lr * (grad + weight_decay * p)`` for every parameter."""
        for name, param in self.params.items():
            param -= lr * (grads[name] + weight_decay * param)

    def flat_params(self) -> np.ndarray:
        return np.concatenate([self.params[n].ravel() for n in PARAM_ORDER])

    def set_flat_params(self, flat: np.ndarray) -> None:
        flat = np.asarray(flat, dtype=np.float64)
        expected = sum(p.size for p in self.params.values())
        if flat.shape != (expected,):
            raise DimensionMismatchError(
                f"flat vector has shape {flat.shape}, expected ({expected},)"
            )
        offset = 0
        for name in PARAM_ORDER:
            shape = self.params[name].shape
            size = self.params[name].size
            self.params[name] = flat[offset : offset + size].reshape(shape).copy()
            offset += size


def save_model(model: Model, path: str | Path) -> None:
    """Write the binary model file (magic, version, dims, float64 params)."""
    d = model.dims
    header = MODEL_MAGIC + struct.pack("<I", MODEL_VERSION) + b"\x00" * 4
    dims = struct.pack(
        "<5I", d.input_dim, d.hidden_dim, d.feature_dim, d.num_classes, d.head_dim
    )
    payload = model.flat_params().astype("<f8").tobytes()
    atomic_write_bytes(path, header + dims + payload)


def load_model(path: str | Path) -> Model:
    raw = Path(path).read_bytes()
    if len(raw) < 36 or raw[:8] != MODEL_MAGIC:
        raise BadHeaderError(f"{path}: not a model file")
    (version,) = struct.unpack("<I", raw[8:12])
    if version != MODEL_VERSION:
        raise BadHeaderError(f"{path}: unsupported model version {version}")
    dims = ModelDims(*struct.unpack("<5I", raw[16:36]))
    model = Model(dims, seed=0)
    expected = sum(int(np.prod(s)) for s in dims.shapes().values())
    flat = np.frombuffer(raw[36:], dtype="<f8")
    if flat.size != expected:
        raise DimensionMismatchError(
            f"{path}: payload has {flat.size} floats, expected {expected}"
        )
    model.set_flat_params(flat)
    return model

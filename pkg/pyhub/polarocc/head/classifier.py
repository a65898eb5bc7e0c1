"""Per-voxel linear classifier and weighted cross-entropy."""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from pyhub.polarocc.core.exceptions import ConfigError, DataError, DimensionError
from pyhub.polarocc.tensor import Array
from pyhub.polarocc.voxelize import FeatureVolume

from .semantic import SemanticGrid

logger = logging.getLogger(__name__)

HEAD_WEIGHT_NAMES = ("classifier", "bias")


@dataclass
class HeadParams:
    classifier: Array
    bias: Array

    def __post_init__(self):
        if np.ndim(self.classifier) != 2:
            raise ConfigError(f"classifier must be C×n_classes, got {np.shape(self.classifier)}")
        self.bias = np.asarray(self.bias, dtype=np.float64).reshape(-1)
        if self.bias.shape != (self.classifier.shape[1],):
            raise ConfigError(f"bias must have {self.classifier.shape[1]} entries, got {self.bias.shape}")

    @property
    def channels(self) -> int:
        return self.classifier.shape[0]

    @property
    def n_classes(self) -> int:
        return self.classifier.shape[1]

    def as_dict(self) -> dict[str, Array]:
        return {"classifier": self.classifier, "bias": self.bias}

    @classmethod
    def shapes(cls, channels: int, n_classes: int) -> dict[str, tuple[int, ...]]:
        return {"classifier": (channels, n_classes), "bias": (n_classes,)}

    @classmethod
    def zeros(cls, channels: int, n_classes: int) -> "HeadParams":
        return cls(np.zeros((channels, n_classes)), np.zeros(n_classes))


def head_logits(features: Array, params: HeadParams) -> Array:
    if features.shape[-1] != params.channels:
        raise DimensionError("classify", features.shape, params.classifier.shape)
    return features @ params.classifier + params.bias


def head_backward(features: Array, params: HeadParams, grad_logits: Array) -> tuple[Array, dict[str, Array]]:
    k = params.n_classes
    g = grad_logits.reshape(-1, k)
    grads = {
        "classifier": features.reshape(-1, params.channels).T @ g,
        "bias": g.sum(axis=0),
    }
    return grad_logits @ params.classifier.T, grads


def classify(f_cart: FeatureVolume, params: HeadParams) -> tuple[Array, SemanticGrid]:
    """Logits [X, Y, Z, n_classes] and argmax labels; ties go to the lowest class index."""
    logits = head_logits(f_cart.data, params)
    labels = np.argmax(logits, axis=-1)
    return logits, SemanticGrid(spec=f_cart.spec, labels=labels, n_classes=params.n_classes)


def _log_softmax(logits: Array) -> Array:
    shifted = logits - np.max(logits, axis=-1, keepdims=True)
    return shifted - np.log(np.sum(np.exp(shifted), axis=-1, keepdims=True))


def cross_entropy_loss(
    logits: Array, target: SemanticGrid, class_weights: Optional[Array] = None
) -> tuple[float, Array]:
    """Mean over voxels of ``w[t]·(−log softmax(logits)[t])``; returns (loss, d loss / d logits)."""
    k = logits.shape[-1]
    if logits.shape[:-1] != target.labels.shape:
        raise DimensionError("cross_entropy_loss", logits.shape, target.labels.shape)
    if target.n_classes != k:
        raise DataError(f"target has {target.n_classes} classes, logits have {k}")
    weights = np.ones(k) if class_weights is None else np.asarray(class_weights, dtype=np.float64)
    if weights.shape != (k,) or np.any(weights < 0):
        raise ConfigError(f"class weights must be {k} non-negative values, got {weights}")
    labels = target.labels.reshape(-1)
    if labels.size and (labels.min() < 0 or labels.max() >= k):
        raise DataError(f"label out of range [0, {k})")
    log_p = _log_softmax(logits.reshape(-1, k))
    rows = np.arange(labels.size)
    w = weights[labels]
    n = max(labels.size, 1)
    loss = float(np.sum(-w * log_p[rows, labels]) / n)
    grad = np.exp(log_p)
    grad[rows, labels] -= 1.0
    grad *= (w / n)[:, None]
    return loss, grad.reshape(logits.shape)

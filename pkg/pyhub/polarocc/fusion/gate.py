"""Gated sum of LiDAR and camera feature volumes.

The gate is one scalar per voxel::

    h = relu(conv3d(concat(F_L, F_C), gate_kernel))      [R, A, Z, C1]
    W = sigmoid(h · gate_proj + gate_bias)               [R, A, Z, 1]
    F = W ⊙ F_L + (1 − W) ⊙ F_C

and is broadcast over channels.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from pyhub.polarocc.core.choices import FusionMode
from pyhub.polarocc.core.exceptions import ConfigError, DimensionError
from pyhub.polarocc.tensor import (
    DEFAULT_PADDING,
    Array,
    conv3d,
    conv3d_backward,
    relu,
    relu_backward,
    sigmoid,
    sigmoid_backward,
)
from pyhub.polarocc.voxelize import FeatureVolume

logger = logging.getLogger(__name__)

GATE_EXTENT = (3, 3, 3)
FUSION_WEIGHT_NAMES = ("gate_kernel", "gate_proj", "gate_bias")


@dataclass
class FusionParams:
    gate_kernel: Array
    gate_proj: Array
    gate_bias: Array

    def __post_init__(self):
        self.gate_bias = np.asarray(self.gate_bias, dtype=np.float64).reshape(1)
        k = np.shape(self.gate_kernel)
        if len(k) != 5 or k[:3] != GATE_EXTENT or k[3] % 2:
            raise ConfigError(f"fusion gate_kernel must be 3×3×3×2C×C1, got {k}")
        if np.shape(self.gate_proj) != (k[4], 1):
            raise ConfigError(f"fusion gate_proj must be {k[4]}×1, got {np.shape(self.gate_proj)}")

    @property
    def channels(self) -> int:
        return self.gate_kernel.shape[3] // 2

    @property
    def hidden(self) -> int:
        return self.gate_kernel.shape[4]

    def as_dict(self) -> dict[str, Array]:
        return {name: getattr(self, name) for name in FUSION_WEIGHT_NAMES}

    @classmethod
    def shapes(cls, channels: int, hidden: int) -> dict[str, tuple[int, ...]]:
        return {
            "gate_kernel": GATE_EXTENT + (2 * channels, hidden),
            "gate_proj": (hidden, 1),
            "gate_bias": (1,),
        }

    @classmethod
    def zeros(cls, channels: int, hidden: int) -> "FusionParams":
        return cls(**{name: np.zeros(shape) for name, shape in cls.shapes(channels, hidden).items()})


@dataclass
class FusionCache:
    f_l: Array
    f_c: Array
    stacked: Array
    pre: Array
    hidden: Array
    gate: Array
    padding: tuple[str, str, str]


def gated_sum(f_l: Array, f_c: Array, gate: Array) -> Array:
    """W ⊙ F_L + (1 − W) ⊙ F_C with ``gate`` broadcast over channels."""
    return gate * f_l + (1.0 - gate) * f_c


def _check_pair(f_l: Array, f_c: Array, params: Optional[FusionParams] = None) -> None:
    if f_l.shape != f_c.shape:
        raise DimensionError("modal_fuse", f_l.shape, f_c.shape)
    if params is not None and f_l.shape[3] != params.channels:
        raise ConfigError(f"fusion gate expects {params.channels} channels per modality, got {f_l.shape[3]}")


def gate_forward(
    f_l: Array, f_c: Array, params: FusionParams, padding: Sequence[str] = DEFAULT_PADDING
) -> tuple[Array, FusionCache]:
    _check_pair(f_l, f_c, params)
    stacked = np.concatenate([f_l, f_c], axis=-1)
    pre = conv3d(stacked, params.gate_kernel, padding)
    hidden = relu(pre)
    # bias 가 ±inf 이면 게이트가 1/0 으로 포화
    gate = sigmoid(hidden @ params.gate_proj + params.gate_bias)
    return gate, FusionCache(f_l, f_c, stacked, pre, hidden, gate, tuple(padding))


def fuse_arrays_cached(
    f_l: Array, f_c: Array, params: FusionParams, padding: Sequence[str] = DEFAULT_PADDING
) -> tuple[Array, FusionCache]:
    gate, cache = gate_forward(f_l, f_c, params, padding)
    return gated_sum(f_l, f_c, gate), cache


def fuse_backward(cache: FusionCache, params: FusionParams, grad: Array) -> tuple[Array, Array, dict[str, Array]]:
    """Returns (grad_f_l, grad_f_c, {weight name: grad})."""
    gate = cache.gate
    grad_l = gate * grad
    grad_c = (1.0 - gate) * grad
    grad_gate = np.sum(grad * (cache.f_l - cache.f_c), axis=-1, keepdims=True)
    grad_logit = sigmoid_backward(gate, grad_gate)
    c1 = params.hidden
    grads = {
        "gate_bias": np.array([grad_logit.sum()]),
        "gate_proj": cache.hidden.reshape(-1, c1).T @ grad_logit.reshape(-1, 1),
    }
    grad_pre = relu_backward(cache.pre, grad_logit @ params.gate_proj.T)
    grad_stacked, grads["gate_kernel"] = conv3d_backward(cache.stacked, params.gate_kernel, grad_pre, cache.padding)
    c = params.channels
    return grad_l + grad_stacked[..., :c], grad_c + grad_stacked[..., c:], grads


def modal_fuse(
    f_l: FeatureVolume,
    f_c: Optional[FeatureVolume],
    params: Optional[FusionParams],
    mode: str = FusionMode.FUSED,
) -> FeatureVolume:
    if mode == FusionMode.LIDAR_ONLY:
        return f_l
    if f_c is None or params is None:
        raise ConfigError("fused mode needs a camera volume and fusion parameters")
    if f_l.spec != f_c.spec:
        raise ConfigError(f"fusion inputs live on different grids: {f_l.spec} vs {f_c.spec}")
    fused, _ = fuse_arrays_cached(f_l.data, f_c.data, params, f_l.spec.padding)
    return FeatureVolume(spec=f_l.spec, data=fused, mask=f_l.mask | f_c.mask)

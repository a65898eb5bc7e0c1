"""Single-head dot-product attention with a scalar relative-position bias.

Standard form::

    A = softmax_k(Q·Kᵀ/√d + E),   out = A·V,   E = relu(Δ·W_pos)

``literal`` form (softmax over channels after the value product)::

    out = softmax_c((Q·Kᵀ/√d + E)·V)

Masked keys are excluded: weight 0 in the standard form, score 0 in the literal form.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from pyhub.polarocc.core.exceptions import ConfigError
from pyhub.polarocc.tensor import Array, relu, relu_backward, softmax, softmax_backward

from .positions import OFFSET_DIM

WEIGHT_NAMES = ("w_q", "w_k", "w_v", "w_pos")


@dataclass
class AttentionWeights:
    w_q: Array
    w_k: Array
    w_v: Array
    w_pos: Array

    def __post_init__(self):
        c = np.shape(self.w_q)[0]
        for name in ("w_q", "w_k", "w_v"):
            if np.shape(getattr(self, name)) != (c, c):
                raise ConfigError(f"attention {name} must be {c}×{c}, got {np.shape(getattr(self, name))}")
        if np.shape(self.w_pos) != (OFFSET_DIM, 1):
            raise ConfigError(f"attention w_pos must be {OFFSET_DIM}×1, got {np.shape(self.w_pos)}")

    @property
    def channels(self) -> int:
        return self.w_q.shape[0]

    def as_dict(self) -> dict[str, Array]:
        return {name: getattr(self, name) for name in WEIGHT_NAMES}

    @classmethod
    def zeros(cls, channels: int) -> "AttentionWeights":
        return cls(*(np.zeros((channels, channels)) for _ in range(3)), np.zeros((OFFSET_DIM, 1)))

    @classmethod
    def shapes(cls, channels: int) -> dict[str, tuple[int, int]]:
        square = (channels, channels)
        return {"w_q": square, "w_k": square, "w_v": square, "w_pos": (OFFSET_DIM, 1)}


@dataclass
class AttentionCache:
    q_in: Array
    kv_in: Array
    offsets: Array
    mask: Optional[Array]
    literal: bool
    Q: Array
    K: Array
    V: Array
    P: Array
    L: Array
    A: Optional[Array]
    out: Array


def _t(x: Array) -> Array:
    return np.swapaxes(x, -1, -2)


def attention_forward(
    q_in: Array,
    kv_in: Array,
    offsets: Array,
    weights: AttentionWeights,
    mask: Optional[Array] = None,
    literal: bool = False,
) -> tuple[Array, AttentionCache]:
    """q_in [B, Nq, C], kv_in [B, Nk, C], offsets [B, Nq, Nk, 5], mask [B, Nq, Nk] -> [B, Nq, C]"""
    scale = 1.0 / np.sqrt(q_in.shape[-1])
    Q = q_in @ weights.w_q
    K = kv_in @ weights.w_k
    V = kv_in @ weights.w_v
    P = (offsets @ weights.w_pos)[..., 0]
    L = (Q @ _t(K)) * scale + relu(P)
    if literal:
        if mask is not None:
            L = np.where(mask, L, 0.0)
        A = None
        out = softmax(L @ V, axis=-1)
    else:
        if mask is not None:
            L = np.where(mask, L, -np.inf)
        A = softmax(L, axis=-1)
        out = A @ V
    return out, AttentionCache(q_in, kv_in, offsets, mask, literal, Q, K, V, P, L, A, out)


def attention_backward(
    cache: AttentionCache, weights: AttentionWeights, grad_out: Array
) -> tuple[Array, Array, dict[str, Array]]:
    """Returns (grad_q_in, grad_kv_in, {weight name: grad})."""
    c = cache.q_in.shape[-1]
    scale = 1.0 / np.sqrt(c)
    if cache.literal:
        grad_m = softmax_backward(cache.out, grad_out)
        grad_l = grad_m @ _t(cache.V)
        grad_v = _t(cache.L) @ grad_m
        if cache.mask is not None:
            grad_l = np.where(cache.mask, grad_l, 0.0)
    else:
        grad_v = _t(cache.A) @ grad_out
        grad_l = softmax_backward(cache.A, grad_out @ _t(cache.V))
    grad_p = relu_backward(cache.P, grad_l)
    grad_s = grad_l * scale
    grad_q = grad_s @ cache.K
    grad_k = _t(grad_s) @ cache.Q

    q_flat = cache.q_in.reshape(-1, c)
    kv_flat = cache.kv_in.reshape(-1, c)
    grads = {
        "w_q": q_flat.T @ grad_q.reshape(-1, c),
        "w_k": kv_flat.T @ grad_k.reshape(-1, c),
        "w_v": kv_flat.T @ grad_v.reshape(-1, c),
        "w_pos": cache.offsets.reshape(-1, OFFSET_DIM).T @ grad_p.reshape(-1, 1),
    }
    grad_q_in = grad_q @ weights.w_q.T
    grad_kv_in = grad_k @ weights.w_k.T + grad_v @ weights.w_v.T
    return grad_q_in, grad_kv_in, grads


def maxsel(window: Array) -> tuple[Array, int]:
    """Feature with the largest L2 norm in an [S, S, S, C] window and its row-major flat index.

    Ties go to the lowest index.
    """
    flat = np.asarray(window).reshape(-1, window.shape[-1])
    index = int(np.argmax(np.sum(flat * flat, axis=-1)))
    return flat[index].copy(), index

"""Dense float64 kernels, each with forward and analytic backward.

There is no autograd graph. Composite modules call the ``*_backward`` functions
in reverse order of their forward pass and ``finite_diff_grad`` is the oracle.
Convolution is cross-correlation (no kernel flip) with stride 1 and "same" extents.
"""

import logging
from dataclasses import dataclass
from itertools import product
from typing import Callable, Optional, Sequence

import numpy as np

from pyhub.polarocc.core.choices import PaddingMode
from pyhub.polarocc.core.exceptions import ConfigError, DimensionError, NumericError

logger = logging.getLogger(__name__)

Array = np.ndarray

# (radial, azimuth, height)
DEFAULT_PADDING = (PaddingMode.ZERO, PaddingMode.WRAP, PaddingMode.ZERO)


def as_array(value) -> Array:
    array = np.ascontiguousarray(value, dtype=np.float64)
    if array.ndim < 1 or any(extent < 1 for extent in array.shape):
        raise DimensionError("as_array", array.shape, ("rank>=1", "extents>=1"))
    return array


@dataclass
class DualArray:
    """A learnable value and its gradient slot (same shape, zero-initialized)."""

    value: Array
    grad: Optional[Array] = None

    def __post_init__(self):
        self.value = as_array(self.value)
        if self.grad is None:
            self.grad = np.zeros_like(self.value)
        else:
            self.grad = as_array(self.grad)
            if self.grad.shape != self.value.shape:
                raise DimensionError("DualArray", self.value.shape, self.grad.shape)

    @property
    def shape(self) -> tuple:
        return self.value.shape

    def zero_grad(self) -> None:
        self.grad.fill(0.0)


#
# matmul
#


def matmul(a: Array, b: Array) -> Array:
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise DimensionError("matmul", a.shape, b.shape)
    return a @ b


def matmul_backward(a: Array, b: Array, grad: Array) -> tuple[Array, Array]:
    """dA = dC·Bᵀ, dB = Aᵀ·dC"""
    return grad @ b.T, a.T @ grad


#
# softmax / relu / sigmoid
#


def softmax(x: Array, axis: int = -1) -> Array:
    if np.isnan(x).any():
        raise NumericError("softmax received NaN input")
    # -inf 는 마스킹된 키로 취급 (가중치 0)
    shifted = x - np.max(x, axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=axis, keepdims=True)


def softmax_backward(y: Array, grad: Array, axis: int = -1) -> Array:
    """y ⊙ (g − ⟨g, y⟩)"""
    return y * (grad - np.sum(grad * y, axis=axis, keepdims=True))


def relu(x: Array) -> Array:
    return np.where(x > 0, x, 0.0)


def relu_backward(x: Array, grad: Array) -> Array:
    # subgradient at 0 is 0
    return np.where(x > 0, grad, 0.0)


def sigmoid(x: Array) -> Array:
    out = np.empty_like(x, dtype=np.float64)
    positive = x >= 0
    out[positive] = 1.0 / (1.0 + np.exp(-x[positive]))
    e = np.exp(x[~positive])
    out[~positive] = e / (1.0 + e)
    return out


def sigmoid_backward(y: Array, grad: Array) -> Array:
    return grad * y * (1.0 - y)


#
# padding
#


def _check_padding(padding: Sequence[str]) -> tuple[str, str, str]:
    if len(padding) != 3:
        raise ConfigError(f"padding needs one mode per spatial axis, got {padding!r}")
    for mode in padding:
        if mode not in PaddingMode.values:
            raise ConfigError(f"unknown padding mode {mode!r}; choices: {PaddingMode.values}")
    return tuple(padding)


def pad_volume(x: Array, halo: Sequence[int], padding: Sequence[str]) -> Array:
    """Pad the three leading (spatial) axes by ``halo`` using zero or wrap mode."""
    out = x
    for axis, (width, mode) in enumerate(zip(halo, padding)):
        if width == 0:
            continue
        n = out.shape[axis]
        if mode == PaddingMode.WRAP:
            out = np.take(out, np.arange(-width, n + width) % n, axis=axis)
        else:
            widths = [(0, 0)] * out.ndim
            widths[axis] = (width, width)
            out = np.pad(out, widths)
    return out


def fold_padding(grad_padded: Array, halo: Sequence[int], padding: Sequence[str], extents: Sequence[int]) -> Array:
    """Adjoint of ``pad_volume``: wrapped halo gradients are added back onto their source bins."""
    out = grad_padded
    for axis, (width, mode, n) in enumerate(zip(halo, padding, extents)):
        if width == 0:
            continue
        if mode == PaddingMode.WRAP:
            moved = np.moveaxis(out, axis, 0)
            folded = np.zeros((n,) + moved.shape[1:])
            np.add.at(folded, np.arange(-width, n + width) % n, moved)
            out = np.moveaxis(folded, 0, axis)
        else:
            out = np.take(out, np.arange(width, width + n), axis=axis)
    return np.ascontiguousarray(out)


#
# conv3d
#


def _check_conv(x: Array, kernel: Array) -> tuple[int, int, int]:
    if x.ndim != 4 or kernel.ndim != 5 or x.shape[3] != kernel.shape[3]:
        raise DimensionError("conv3d", x.shape, kernel.shape)
    if any(extent % 2 == 0 for extent in kernel.shape[:3]):
        raise ConfigError(f"conv3d kernel extents must be odd, got {kernel.shape[:3]}")
    return tuple(extent // 2 for extent in kernel.shape[:3])


def conv3d(x: Array, kernel: Array, padding: Sequence[str] = DEFAULT_PADDING) -> Array:
    """x: [R, A, Z, Cin], kernel: [kr, ka, kz, Cin, Cout] -> [R, A, Z, Cout]"""
    halo = _check_conv(x, kernel)
    padding = _check_padding(padding)
    xp = pad_volume(x, halo, padding)
    R, A, Z, _ = x.shape
    out = np.zeros((R, A, Z, kernel.shape[4]))
    # 커널 오프셋 순서(r, a, z 사전식)로 누적 → 결과가 비트 단위로 재현됨
    for dr, da, dz in product(*(range(extent) for extent in kernel.shape[:3])):
        out += xp[dr : dr + R, da : da + A, dz : dz + Z, :] @ kernel[dr, da, dz]
    return out


def conv3d_backward(
    x: Array, kernel: Array, grad: Array, padding: Sequence[str] = DEFAULT_PADDING
) -> tuple[Array, Array]:
    """Returns (d_input, d_kernel) for upstream ``grad`` of shape [R, A, Z, Cout]."""
    halo = _check_conv(x, kernel)
    padding = _check_padding(padding)
    xp = pad_volume(x, halo, padding)
    R, A, Z, _ = x.shape
    grad_xp = np.zeros_like(xp)
    grad_kernel = np.zeros_like(kernel)
    for dr, da, dz in product(*(range(extent) for extent in kernel.shape[:3])):
        window = xp[dr : dr + R, da : da + A, dz : dz + Z, :]
        grad_kernel[dr, da, dz] = np.tensordot(window, grad, axes=([0, 1, 2], [0, 1, 2]))
        grad_xp[dr : dr + R, da : da + A, dz : dz + Z, :] += grad @ kernel[dr, da, dz].T
    return fold_padding(grad_xp, halo, padding, x.shape[:3]), grad_kernel


def compose_kernels(first: Array, second: Array) -> Array:
    """Kernel K with conv(conv(x, first), second) == conv(x, K) under circular padding.

    Extent per axis is ``e1 + e2 - 1``; channels chain as [Cin, Cmid] · [Cmid, Cout].
    """
    if first.ndim != 5 or second.ndim != 5 or first.shape[4] != second.shape[3]:
        raise DimensionError("compose_kernels", first.shape, second.shape)
    extents = tuple(a + b - 1 for a, b in zip(first.shape[:3], second.shape[:3]))
    composed = np.zeros(extents + (first.shape[3], second.shape[4]))
    for i in np.ndindex(*first.shape[:3]):
        for j in np.ndindex(*second.shape[:3]):
            composed[i[0] + j[0], i[1] + j[1], i[2] + j[2]] += first[i] @ second[j]
    return composed


def delta_kernel(extents: Sequence[int], channels: int) -> Array:
    """Identity kernel: center tap is the identity matrix across channels."""
    kernel = np.zeros(tuple(extents) + (channels, channels))
    kernel[tuple(extent // 2 for extent in extents)] = np.eye(channels)
    return kernel


#
# pooling
#


def avg_pool(x: Array, stride: Sequence[int]) -> Array:
    sr, sa, sz = stride
    R, A, Z, C = x.shape
    if R % sr or A % sa or Z % sz:
        raise ConfigError(f"avg_pool: extents {(R, A, Z)} not divisible by stride {tuple(stride)}")
    return x.reshape(R // sr, sr, A // sa, sa, Z // sz, sz, C).mean(axis=(1, 3, 5))


def avg_pool_backward(grad: Array, stride: Sequence[int]) -> Array:
    sr, sa, sz = stride
    expanded = np.repeat(np.repeat(np.repeat(grad, sr, axis=0), sa, axis=1), sz, axis=2)
    return expanded / float(sr * sa * sz)


#
# gradient oracle
#


def finite_diff_grad(f: Callable[[Array], float], x: Array, h: float = 1e-4) -> Array:
    """Central differences (f(x+heᵢ) − f(x−heᵢ)) / 2h with hᵢ = h·max(1, |xᵢ|)."""
    if h <= 0:
        raise ConfigError(f"finite difference step must be positive, got {h}")
    x = as_array(x).copy()
    flat = x.reshape(-1)
    grad = np.zeros_like(flat)
    for i in range(flat.size):
        original = flat[i]
        step = h * max(1.0, abs(original))
        flat[i] = original + step
        f_plus = float(f(x))
        flat[i] = original - step
        f_minus = float(f(x))
        flat[i] = original
        if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
            raise NumericError(f"non-finite function value at element {i}")
        grad[i] = (f_plus - f_minus) / (2.0 * step)
    return grad.reshape(x.shape)


def relative_error(analytic: Array, numeric: Array) -> float:
    """max|a − b| / max(max|a|, max|b|, 1e-8), evaluated per tensor."""
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    if analytic.shape != numeric.shape:
        raise DimensionError("relative_error", analytic.shape, numeric.shape)
    if analytic.size == 0:
        return 0.0
    scale = max(float(np.max(np.abs(analytic))), float(np.max(np.abs(numeric))), 1e-8)
    return float(np.max(np.abs(analytic - numeric)) / scale)

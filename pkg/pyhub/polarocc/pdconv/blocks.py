"""Plane-decomposed convolution blocks.

A 3×3×3 kernel is replaced by three kernels that each collapse one axis: ``r`` (1×3×3),
``a`` (3×1×3) and ``z`` (3×3×1). Topologies wire them into chains whose outputs are averaged:

    a      one serial chain in ``order``
    b      three single-kernel branches
    c      ``order`` and its reverse
    d      the three cyclic rotations of ``order``
    assym  one serial chain of the first two kernels of ``order``
    naive  one full 3×3×3 kernel

Every kernel application is followed by ReLU unless ``linear_mode`` is set.
All chains share the same kernel set.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from pyhub.polarocc.core.choices import Topology
from pyhub.polarocc.core.exceptions import ConfigError
from pyhub.polarocc.tensor import DEFAULT_PADDING, Array, conv3d, conv3d_backward, relu, relu_backward

logger = logging.getLogger(__name__)

KERNEL_EXTENTS = {
    "r": (1, 3, 3),
    "a": (3, 1, 3),
    "z": (3, 3, 1),
    "full": (3, 3, 3),
}

DECOMPOSED = ("r", "a", "z")


@dataclass
class PdStackConfig:
    topology: str = Topology.SERIAL
    order: tuple[str, ...] = DECOMPOSED
    linear_mode: bool = False
    padding: tuple[str, str, str] = DEFAULT_PADDING

    def __post_init__(self):
        if self.topology not in Topology.values:
            raise ConfigError(f"unknown pdconv topology {self.topology!r}; choices: {Topology.values}")
        self.topology = Topology(self.topology)
        self.order = tuple(self.order)
        if sorted(self.order) != sorted(DECOMPOSED):
            raise ConfigError(f"pdconv order must be a permutation of {DECOMPOSED}, got {self.order}")

    def chains(self) -> list[tuple[str, ...]]:
        o = self.order
        if self.topology == Topology.SERIAL:
            return [o]
        if self.topology == Topology.PARALLEL:
            return [("r",), ("a",), ("z",)]
        if self.topology == Topology.HYBRID_C:
            return [o, o[::-1]]
        if self.topology == Topology.HYBRID_D:
            return [o, o[1:] + o[:1], o[2:] + o[:2]]
        if self.topology == Topology.ASSYM:
            return [o[:2]]
        return [("full",)]

    def kernel_names(self) -> list[str]:
        names = []
        for chain in self.chains():
            for name in chain:
                if name not in names:
                    names.append(name)
        return sorted(names, key=list(KERNEL_EXTENTS).index)


@dataclass
class DecomposedKernelSet:
    """Kernels keyed by ``r``, ``a``, ``z`` (decomposed) or ``full`` (naive baseline)."""

    kernels: dict[str, Array] = field(default_factory=dict)

    @property
    def k_r(self) -> Optional[Array]:
        return self.kernels.get("r")

    @property
    def k_a(self) -> Optional[Array]:
        return self.kernels.get("a")

    @property
    def k_z(self) -> Optional[Array]:
        return self.kernels.get("z")

    @property
    def k_full(self) -> Optional[Array]:
        return self.kernels.get("full")

    @classmethod
    def zeros(cls, channels: int, cfg: PdStackConfig) -> "DecomposedKernelSet":
        return cls({name: np.zeros(kernel_shape(name, channels)) for name in cfg.kernel_names()})

    @classmethod
    def delta(cls, channels: int, cfg: PdStackConfig) -> "DecomposedKernelSet":
        kernels = {}
        for name in cfg.kernel_names():
            k = np.zeros(kernel_shape(name, channels))
            k[tuple(e // 2 for e in KERNEL_EXTENTS[name])] = np.eye(channels)
            kernels[name] = k
        return cls(kernels)


def kernel_shape(name: str, channels: int) -> tuple[int, ...]:
    return KERNEL_EXTENTS[name] + (channels, channels)


@dataclass
class BlockStats:
    params: int
    macs: int


@dataclass
class _Step:
    name: str
    inputs: Array
    pre: Array


def _check(x: Array, params: DecomposedKernelSet, cfg: PdStackConfig) -> None:
    if x.ndim != 4:
        raise ConfigError(f"pd block expects a [R, A, Z, C] volume, got shape {x.shape}")
    channels = x.shape[3]
    for name in cfg.kernel_names():
        kernel = params.kernels.get(name)
        if kernel is None:
            raise ConfigError(f"pd block topology {cfg.topology} needs kernel {name!r}")
        if kernel.shape != kernel_shape(name, channels):
            raise ConfigError(f"kernel {name!r} has shape {kernel.shape}, expected {kernel_shape(name, channels)}")


def pd_block_forward_cached(
    x: Array, params: DecomposedKernelSet, cfg: PdStackConfig
) -> tuple[Array, list[list[_Step]]]:
    _check(x, params, cfg)
    chains = cfg.chains()
    out = np.zeros_like(x)
    cache = []
    for chain in chains:
        h = x
        steps = []
        for name in chain:
            pre = conv3d(h, params.kernels[name], cfg.padding)
            steps.append(_Step(name, h, pre))
            h = pre if cfg.linear_mode else relu(pre)
        out += h
        cache.append(steps)
    return out / len(chains), cache


def pd_block_forward(x: Array, params: DecomposedKernelSet, cfg: PdStackConfig) -> Array:
    return pd_block_forward_cached(x, params, cfg)[0]


def pd_block_backward(
    x: Array,
    params: DecomposedKernelSet,
    cfg: PdStackConfig,
    upstream_grad: Array,
    cache: Optional[list[list[_Step]]] = None,
) -> tuple[Array, dict[str, Array]]:
    """Returns (grad_x, {kernel name: grad})."""
    if cache is None:
        _, cache = pd_block_forward_cached(x, params, cfg)
    grad_x = np.zeros_like(x)
    grads = {name: np.zeros_like(params.kernels[name]) for name in cfg.kernel_names()}
    share = upstream_grad / len(cache)
    for steps in cache:
        g = share
        for step in reversed(steps):
            if not cfg.linear_mode:
                g = relu_backward(step.pre, g)
            g, grad_kernel = conv3d_backward(step.inputs, params.kernels[step.name], g, cfg.padding)
            grads[step.name] += grad_kernel
        grad_x += g
    return grad_x, grads


def block_stats(cfg: PdStackConfig, channels: int, extents: Sequence[int]) -> BlockStats:
    """Parameter count of the kernel set and multiply-accumulates of one forward pass."""
    n_voxels = int(np.prod(extents))
    params = sum(int(np.prod(kernel_shape(name, channels))) for name in cfg.kernel_names())
    macs = 0
    for chain in cfg.chains():
        for name in chain:
            macs += n_voxels * int(np.prod(KERNEL_EXTENTS[name])) * channels * channels
    return BlockStats(params=params, macs=macs)

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from pyhub.polarocc.core.exceptions import ConfigError
from pyhub.polarocc.tensor import Array, avg_pool, avg_pool_backward

from .blocks import DecomposedKernelSet, PdStackConfig, pd_block_backward, pd_block_forward_cached

logger = logging.getLogger(__name__)

Stride = tuple[int, int, int]

FULL_SCHEDULE: list[Stride] = [(2, 2, 2), (2, 2, 2), (2, 2, 2)]
DESK_SCHEDULE: list[Stride] = [(2, 2, 2), (2, 2, 1)]


@dataclass
class BackboneStage:
    kernels: DecomposedKernelSet
    cfg: PdStackConfig
    stride: Stride = (1, 1, 1)

    def __post_init__(self):
        self.stride = tuple(int(s) for s in self.stride)


def schedule_shapes(extents: Sequence[int], schedule: Sequence[Sequence[int]]) -> list[tuple[int, int, int]]:
    """Extents after each stage; raises ConfigError when a stride does not divide."""
    shapes = []
    current = tuple(int(e) for e in extents)
    for i, stride in enumerate(schedule):
        stride = tuple(int(s) for s in stride)
        if len(stride) != 3 or any(s < 1 for s in stride):
            raise ConfigError(f"stage {i}: stride must be three positive ints, got {stride}")
        if any(e % s for e, s in zip(current, stride)):
            raise ConfigError(f"stage {i}: extents {current} are not divisible by stride {stride}")
        current = tuple(e // s for e, s in zip(current, stride))
        shapes.append(current)
    return shapes


def total_stride(schedule: Sequence[Sequence[int]]) -> Stride:
    return tuple(int(np.prod([s[axis] for s in schedule])) if schedule else 1 for axis in range(3))


def backbone_forward_cached(x: Array, stages: Sequence[BackboneStage]) -> tuple[Array, list]:
    schedule_shapes(x.shape[:3], [stage.stride for stage in stages])
    cache = []
    h = x
    for i, stage in enumerate(stages):
        block_out, block_cache = pd_block_forward_cached(h, stage.kernels, stage.cfg)
        cache.append((h, block_cache))
        h = block_out if stage.stride == (1, 1, 1) else avg_pool(block_out, stage.stride)
        logger.debug("backbone stage %d: %s -> %s", i, block_out.shape[:3], h.shape[:3])
    return h, cache


def backbone_forward(x: Array, stages: Sequence[BackboneStage]) -> Array:
    return backbone_forward_cached(x, stages)[0]


def backbone_backward(
    x: Array, stages: Sequence[BackboneStage], upstream_grad: Array, cache: Optional[list] = None
) -> tuple[Array, list[dict[str, Array]]]:
    if cache is None:
        _, cache = backbone_forward_cached(x, stages)
    grads: list[dict[str, Array]] = [dict() for _ in stages]
    g = upstream_grad
    for i in reversed(range(len(stages))):
        stage = stages[i]
        block_input, block_cache = cache[i]
        if stage.stride != (1, 1, 1):
            g = avg_pool_backward(g, stage.stride)
        g, grads[i] = pd_block_backward(block_input, stage.kernels, stage.cfg, g, cache=block_cache)
    return g, grads

from .backbone import (
    DESK_SCHEDULE,
    FULL_SCHEDULE,
    BackboneStage,
    backbone_backward,
    backbone_forward,
    backbone_forward_cached,
    schedule_shapes,
    total_stride,
)
from .blocks import (
    DECOMPOSED,
    KERNEL_EXTENTS,
    BlockStats,
    DecomposedKernelSet,
    PdStackConfig,
    block_stats,
    kernel_shape,
    pd_block_backward,
    pd_block_forward,
    pd_block_forward_cached,
)

__all__ = [
    "DECOMPOSED",
    "DESK_SCHEDULE",
    "KERNEL_EXTENTS",
    "FULL_SCHEDULE",
    "BackboneStage",
    "BlockStats",
    "DecomposedKernelSet",
    "PdStackConfig",
    "backbone_backward",
    "backbone_forward",
    "backbone_forward_cached",
    "block_stats",
    "kernel_shape",
    "pd_block_backward",
    "pd_block_forward",
    "pd_block_forward_cached",
    "schedule_shapes",
    "total_stride",
]

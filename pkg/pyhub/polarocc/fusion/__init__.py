from .gate import (
    FUSION_WEIGHT_NAMES,
    GATE_EXTENT,
    FusionCache,
    FusionParams,
    fuse_arrays_cached,
    fuse_backward,
    gate_forward,
    gated_sum,
    modal_fuse,
)

__all__ = [
    "FUSION_WEIGHT_NAMES",
    "GATE_EXTENT",
    "FusionCache",
    "FusionParams",
    "fuse_arrays_cached",
    "fuse_backward",
    "gate_forward",
    "gated_sum",
    "modal_fuse",
]

from .attention import (
    WEIGHT_NAMES,
    AttentionCache,
    AttentionWeights,
    attention_backward,
    attention_forward,
    maxsel,
)
from .module import (
    AXES,
    CondensedVolume,
    GrpCache,
    GrpParams,
    global_decomposed_attention,
    grp_backward,
    grp_forward,
    grp_forward_array,
    grp_forward_cached,
    local_condense_attention,
    neighbor_windows,
    reverse_propagate,
    window_pads,
)
from .positions import OFFSET_DIM, CartesianOffsets, OffsetGeometry, PolarOffsets, offset_geometry

__all__ = [
    "AXES",
    "OFFSET_DIM",
    "WEIGHT_NAMES",
    "AttentionCache",
    "AttentionWeights",
    "CartesianOffsets",
    "CondensedVolume",
    "GrpCache",
    "GrpParams",
    "OffsetGeometry",
    "PolarOffsets",
    "attention_backward",
    "attention_forward",
    "global_decomposed_attention",
    "grp_backward",
    "grp_forward",
    "grp_forward_array",
    "grp_forward_cached",
    "local_condense_attention",
    "maxsel",
    "neighbor_windows",
    "offset_geometry",
    "reverse_propagate",
    "window_pads",
]

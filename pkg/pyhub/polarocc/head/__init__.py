from .classifier import (
    HEAD_WEIGHT_NAMES,
    HeadParams,
    classify,
    cross_entropy_loss,
    head_backward,
    head_logits,
)
from .sampling import (
    NO_WRAP,
    POLAR_WRAP,
    SamplingPlan,
    build_plan,
    cartesian_continuous_index,
    polar_continuous_index,
    polar_to_cartesian_backward,
    polar_to_cartesian_grid,
    resampling_plan,
    sample,
    sample_backward,
    trilinear_sample,
)
from .semantic import (
    FREE_LABEL,
    SEMANTIC_MAGIC,
    SemanticGrid,
    dumps_semantic,
    load_semantic,
    loads_semantic,
    save_semantic,
)

__all__ = [
    "FREE_LABEL",
    "HEAD_WEIGHT_NAMES",
    "NO_WRAP",
    "POLAR_WRAP",
    "SEMANTIC_MAGIC",
    "HeadParams",
    "SamplingPlan",
    "SemanticGrid",
    "build_plan",
    "cartesian_continuous_index",
    "classify",
    "cross_entropy_loss",
    "dumps_semantic",
    "head_backward",
    "head_logits",
    "load_semantic",
    "loads_semantic",
    "polar_continuous_index",
    "polar_to_cartesian_backward",
    "polar_to_cartesian_grid",
    "resampling_plan",
    "sample",
    "sample_backward",
    "save_semantic",
    "trilinear_sample",
]

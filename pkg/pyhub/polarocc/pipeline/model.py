"""End-to-end model: voxelize → stem → [fuse] → PD-Conv backbone → GRP → resample → head.

``forward_features`` is the differentiable core; it takes the normalized voxel features and
the occupancy mask, so the gradient harness can perturb its inputs directly. Empty voxels are
zeroed after the stem, which keeps an empty cloud at exactly zero until the head bias.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from pyhub.polarocc.core.exceptions import ConfigError, DimensionError
from pyhub.polarocc.fusion import FusionCache, fuse_arrays_cached, fuse_backward
from pyhub.polarocc.grp import GrpCache, grp_backward, grp_forward_cached, offset_geometry
from pyhub.polarocc.head import (
    SemanticGrid,
    classify,
    cross_entropy_loss,
    head_backward,
    head_logits,
    resampling_plan,
    sample,
    sample_backward,
)
from pyhub.polarocc.pdconv import backbone_backward, backbone_forward_cached
from pyhub.polarocc.tensor import Array, conv3d, conv3d_backward, relu, relu_backward
from pyhub.polarocc.voxelize import FeatureVolume, PointCloud, normalize_features, voxelize_points

from .config import ModelConfig
from .params import ParamStore

logger = logging.getLogger(__name__)


@dataclass
class ModelInputs:
    """Normalized voxel features, occupancy mask and optional camera features on the working grid."""

    x0: Array
    mask: np.ndarray
    camera: Optional[Array] = None


@dataclass
class ForwardCache:
    inputs: ModelInputs
    stem_pre: Array
    stem_out: Array
    fusion: Optional[FusionCache] = None
    backbone_in: Optional[Array] = None
    backbone: list = field(default_factory=list)
    grp_in: Optional[Array] = None
    grp: Optional[GrpCache] = None
    coarse: Optional[Array] = None
    f_cart: Optional[Array] = None


def prepare_inputs(cfg: ModelConfig, pc: PointCloud, camera: Optional[FeatureVolume] = None) -> ModelInputs:
    spec = cfg.working_spec()
    volume = voxelize_points(pc, spec)
    cam = None
    if cfg.fused():
        if camera is None:
            raise ConfigError("fusion.mode is 'fused' but no camera volume was given")
        if camera.spec != spec:
            raise ConfigError(f"camera volume lives on {camera.spec}, the working grid is {spec}")
        cam = camera.data
    return ModelInputs(x0=normalize_features(volume), mask=volume.mask, camera=cam)


def _check_inputs(cfg: ModelConfig, inputs: ModelInputs) -> None:
    bins = tuple(cfg.working_spec().bins)
    if inputs.x0.shape[:3] != bins or inputs.mask.shape != bins:
        raise DimensionError("forward_features", inputs.x0.shape, bins)
    if cfg.fused() and (inputs.camera is None or inputs.camera.shape != bins + (cfg.channels,)):
        shape = None if inputs.camera is None else inputs.camera.shape
        raise DimensionError("forward_features camera", shape or (), bins + (cfg.channels,))


def forward_features_cached(cfg: ModelConfig, params: ParamStore, inputs: ModelInputs) -> tuple[Array, ForwardCache]:
    """Cartesian output features ``[X, Y, Z, C]`` and everything the backward pass needs."""
    _check_inputs(cfg, inputs)
    padding = cfg.working_spec().padding
    w, b = params.stem()
    pre = conv3d(inputs.x0, w, padding) + b
    h = relu(pre) * inputs.mask[..., None]
    cache = ForwardCache(inputs=inputs, stem_pre=pre, stem_out=h)

    if cfg.fused():
        h, cache.fusion = fuse_arrays_cached(h, inputs.camera, params.fusion(), padding)

    cache.backbone_in = h
    h, cache.backbone = backbone_forward_cached(h, params.backbone(cfg))

    final = cfg.final_spec()
    cache.grp_in = h
    if cfg.grp.enable:
        h, cache.grp = grp_forward_cached(h, params.grp(cfg), offset_geometry(final))
    cache.coarse = h

    out_spec = cfg.output_spec()
    f_cart = sample(h, resampling_plan(final, out_spec)).reshape(tuple(out_spec.bins) + (cfg.channels,))
    cache.f_cart = f_cart
    return f_cart, cache


def forward_features(cfg: ModelConfig, params: ParamStore, inputs: ModelInputs) -> Array:
    return forward_features_cached(cfg, params, inputs)[0]


def backward_features(
    cfg: ModelConfig, params: ParamStore, cache: ForwardCache, grad_f_cart: Array
) -> tuple[dict[str, Array], Array, Optional[Array]]:
    """Returns ({param name: grad}, grad_x0, grad_camera) for upstream ``grad_f_cart``."""
    grads: dict[str, Array] = {}
    final = cfg.final_spec()
    plan = resampling_plan(final, cfg.output_spec())
    g = sample_backward(plan, grad_f_cart.reshape(-1, grad_f_cart.shape[-1]))

    if cfg.grp.enable:
        g, grp_grads = grp_backward(cache.grp_in, params.grp(cfg), offset_geometry(final), g, cache=cache.grp)
        for module, weights in grp_grads.items():
            for name, value in weights.items():
                grads[f"grp.{module}.{name}"] = value

    g, stage_grads = backbone_backward(cache.backbone_in, params.backbone(cfg), g, cache=cache.backbone)
    for i, kernels in enumerate(stage_grads):
        for name, value in kernels.items():
            grads[f"backbone.{i}.{name}"] = value

    grad_camera = None
    if cfg.fused():
        g, grad_camera, fusion_grads = fuse_backward(cache.fusion, params.fusion(), g)
        for name, value in fusion_grads.items():
            grads[f"fusion.{name}"] = value

    padding = cfg.working_spec().padding
    w, _ = params.stem()
    grad_pre = relu_backward(cache.stem_pre, g * cache.inputs.mask[..., None])
    grads["stem.b"] = grad_pre.reshape(-1, grad_pre.shape[-1]).sum(axis=0)
    grad_x0, grads["stem.w"] = conv3d_backward(cache.inputs.x0, w, grad_pre, padding)
    return grads, grad_x0, grad_camera


def class_weights(cfg: ModelConfig) -> Array:
    weights = np.ones(cfg.n_classes)
    weights[0] = cfg.train.free_weight
    return weights


def forward(
    cfg: ModelConfig, pc: PointCloud, camera: Optional[FeatureVolume], params: ParamStore
) -> tuple[Array, SemanticGrid]:
    """Logits ``[X, Y, Z, n_classes]`` and the argmax labels on the output grid."""
    return predict_inputs(cfg, params, prepare_inputs(cfg, pc, camera))


def predict_inputs(cfg: ModelConfig, params: ParamStore, inputs: ModelInputs) -> tuple[Array, SemanticGrid]:
    f_cart = forward_features(cfg, params, inputs)
    volume = FeatureVolume(spec=cfg.output_spec(), data=f_cart, mask=np.ones(f_cart.shape[:3], dtype=bool))
    return classify(volume, params.head())


def loss_and_input_grads(
    cfg: ModelConfig, params: ParamStore, inputs: ModelInputs, target: SemanticGrid
) -> tuple[float, dict[str, Array], Array, Optional[Array]]:
    """Weighted cross-entropy on the output grid, its parameter gradients and its input gradients."""
    f_cart, cache = forward_features_cached(cfg, params, inputs)
    head = params.head()
    logits = head_logits(f_cart, head)
    loss, grad_logits = cross_entropy_loss(logits, target, class_weights(cfg))
    grad_f_cart, head_grads = head_backward(f_cart, head, grad_logits)
    grads, grad_x0, grad_camera = backward_features(cfg, params, cache, grad_f_cart)
    for name, value in head_grads.items():
        grads[f"head.{name}"] = value
    return loss, grads, grad_x0, grad_camera


def loss_and_grads(
    cfg: ModelConfig, params: ParamStore, inputs: ModelInputs, target: SemanticGrid
) -> tuple[float, dict[str, Array]]:
    loss, grads, _, _ = loss_and_input_grads(cfg, params, inputs, target)
    return loss, grads


def loss_value(cfg: ModelConfig, params: ParamStore, inputs: ModelInputs, target: SemanticGrid) -> float:
    logits = head_logits(forward_features(cfg, params, inputs), params.head())
    return cross_entropy_loss(logits, target, class_weights(cfg))[0]

"""Analytic vs central-difference gradients for every module and every named parameter.

Module entries check input gradients of each building block on small random instances.
Parameter entries perturb one stored tensor at a time through the full pipeline loss, so a
wrong backward anywhere upstream of a parameter shows up on that parameter.
"""

import logging
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np
from django.conf import settings

from pyhub.polarocc.core.choices import FusionMode, GridPreset
from pyhub.polarocc.fusion import fuse_arrays_cached, fuse_backward
from pyhub.polarocc.grp import grp_backward, grp_forward_array, offset_geometry
from pyhub.polarocc.head import (
    SemanticGrid,
    cross_entropy_loss,
    head_backward,
    head_logits,
    resampling_plan,
    sample,
    sample_backward,
)
from pyhub.polarocc.pdconv import pd_block_backward, pd_block_forward
from pyhub.polarocc.tensor import Array, conv3d, conv3d_backward, finite_diff_grad, relative_error
from pyhub.polarocc.voxelize import N_CHANNELS

from .config import ModelConfig, config_from_dict
from .model import ModelInputs, class_weights, loss_and_input_grads, loss_value
from .params import ParamStore

logger = logging.getLogger(__name__)


@dataclass
class GradcheckEntry:
    module: str
    target: str
    error: float
    passed: bool


@dataclass
class GradcheckReport:
    tolerance: float
    fd_step: float
    entries: list[GradcheckEntry] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(entry.passed for entry in self.entries)

    def failures(self) -> list[GradcheckEntry]:
        return [entry for entry in self.entries if not entry.passed]

    def module_errors(self) -> dict[str, float]:
        """Max relative error per module, in first-seen order."""
        out: dict[str, float] = {}
        for entry in self.entries:
            out[entry.module] = max(out.get(entry.module, 0.0), entry.error)
        return out

    def param_targets(self) -> list[str]:
        return [entry.target for entry in self.entries if entry.module.startswith("param:")]

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "tolerance": self.tolerance,
            "fd_step": self.fd_step,
            "modules": self.module_errors(),
            "entries": [asdict(entry) for entry in self.entries],
        }


def tiny_config(seed: int = 0) -> ModelConfig:
    """Fused tiny-preset model with every component on."""
    return config_from_dict(
        {
            "grid": {"preset": GridPreset.TINY.value},
            "channels": 3,
            "seed": seed,
            "fusion": {"mode": FusionMode.FUSED.value, "hidden": 2},
            "grp": {"window_s": 2},
        }
    )


class _Checker:
    def __init__(self, report: GradcheckReport):
        self.report = report

    def add(self, module: str, target: str, analytic: Array, f: Callable[[Array], float], x: Array) -> None:
        numeric = finite_diff_grad(f, x, h=self.report.fd_step)
        error = relative_error(analytic, numeric)
        passed = bool(error <= self.report.tolerance)
        if not passed:
            logger.warning("gradcheck %s/%s: relative error %.3e", module, target, error)
        self.report.entries.append(GradcheckEntry(module, target, error, passed))


def _module_checks(check: _Checker, cfg: ModelConfig, params: ParamStore, rng: np.random.Generator) -> None:
    c = cfg.channels
    spec = cfg.working_spec()
    bins = tuple(spec.bins)
    padding = spec.padding

    x = rng.normal(size=bins + (c,))
    kernel = rng.normal(size=(3, 3, 3, c, c)) / 3.0
    w_out = rng.normal(size=bins + (c,))
    analytic = conv3d_backward(x, kernel, w_out, padding)[0]
    check.add("conv3d", "input", analytic, lambda v: float(np.sum(conv3d(v, kernel, padding) * w_out)), x)

    stage = params.backbone(cfg)[0]
    kernels, stack = stage.kernels, stage.cfg
    analytic = pd_block_backward(x, kernels, stack, w_out)[0]
    check.add("pdconv", "input", analytic, lambda v: float(np.sum(pd_block_forward(v, kernels, stack) * w_out)), x)

    if cfg.fused():
        f_c = rng.normal(size=bins + (c,))
        fusion = params.fusion()
        _, cache = fuse_arrays_cached(x, f_c, fusion, padding)
        grad_l, grad_c, _ = fuse_backward(cache, fusion, w_out)

        def fused(lidar: Array, camera: Array) -> float:
            return float(np.sum(fuse_arrays_cached(lidar, camera, fusion, padding)[0] * w_out))

        check.add("fusion", "lidar", grad_l, lambda v: fused(v, f_c), x)
        check.add("fusion", "camera", grad_c, lambda v: fused(x, v), f_c)

    final = cfg.final_spec()
    coarse = rng.normal(size=tuple(final.bins) + (c,))
    w_coarse = rng.normal(size=coarse.shape)
    if cfg.grp.enable:
        grp, geometry = params.grp(cfg), offset_geometry(final)
        analytic = grp_backward(coarse, grp, geometry, w_coarse)[0]

        def mixed(v: Array) -> float:
            return float(np.sum(grp_forward_array(v, grp, geometry) * w_coarse))

        check.add("grp", "input", analytic, mixed, coarse)

    plan = resampling_plan(final, cfg.output_spec())
    w_q = rng.normal(size=(plan.n_queries, c))
    check.add("sampler", "input", sample_backward(plan, w_q), lambda v: float(np.sum(sample(v, plan) * w_q)), coarse)

    head = params.head()
    feats = rng.normal(size=(plan.n_queries, c))
    w_logits = rng.normal(size=(plan.n_queries, cfg.n_classes))
    analytic = head_backward(feats, head, w_logits)[0]
    check.add("head", "input", analytic, lambda v: float(np.sum(head_logits(v, head) * w_logits)), feats)

    out_spec = cfg.output_spec()
    logits = rng.normal(size=tuple(out_spec.bins) + (cfg.n_classes,))
    target = SemanticGrid(out_spec, rng.integers(0, cfg.n_classes, size=out_spec.bins), cfg.n_classes)
    weights = class_weights(cfg)
    analytic = cross_entropy_loss(logits, target, weights)[1]
    check.add("loss", "logits", analytic, lambda v: cross_entropy_loss(v, target, weights)[0], logits)


def _pipeline_checks(check: _Checker, cfg: ModelConfig, params: ParamStore, rng: np.random.Generator) -> None:
    bins = tuple(cfg.working_spec().bins)
    camera = rng.normal(size=bins + (cfg.channels,)) if cfg.fused() else None
    inputs = ModelInputs(x0=rng.normal(size=bins + (N_CHANNELS,)), mask=np.ones(bins, dtype=bool), camera=camera)
    out_spec = cfg.output_spec()
    target = SemanticGrid(out_spec, rng.integers(0, cfg.n_classes, size=out_spec.bins), cfg.n_classes)

    _, grads, grad_x0, grad_camera = loss_and_input_grads(cfg, params, inputs, target)

    def with_input(name: str) -> Callable[[Array], float]:
        def f(v: Array) -> float:
            fields = {"x0": inputs.x0, "mask": inputs.mask, "camera": inputs.camera, name: v}
            return loss_value(cfg, params, ModelInputs(**fields), target)

        return f

    check.add("pipeline", "x0", grad_x0, with_input("x0"), inputs.x0)
    if camera is not None:
        check.add("pipeline", "camera", grad_camera, with_input("camera"), camera)

    for name in params.names():
        value = params[name].value
        original = value.copy()

        def f(v: Array, value=value) -> float:
            value[...] = v
            return loss_value(cfg, params, inputs, target)

        try:
            check.add(f"param:{name.split('.')[0]}", name, grads[name], f, original)
        finally:
            value[...] = original


def gradcheck_all(
    cfg: Optional[ModelConfig] = None, seed: int = 0, tolerance: Optional[float] = None
) -> GradcheckReport:
    cfg = cfg or tiny_config(seed)
    report = GradcheckReport(
        tolerance=float(tolerance if tolerance is not None else settings.POLAROCC_GRADCHECK_TOLERANCE),
        fd_step=float(settings.POLAROCC_FD_STEP),
    )
    params = ParamStore.initialize(cfg, seed)
    rng = np.random.default_rng(seed)
    check = _Checker(report)
    _module_checks(check, cfg, params, rng)
    _pipeline_checks(check, cfg, params, rng)
    logger.info("gradcheck: %d entries, %d failures", len(report.entries), len(report.failures()))
    return report

"""Named learnable arrays of one model.

Every tensor lives in a ``ParamStore`` as a ``DualArray`` under a dotted name::

    stem.w, stem.b
    fusion.gate_kernel, fusion.gate_proj, fusion.gate_bias       (fused mode only)
    backbone.{stage}.{r|a|z|full}
    grp.{local|axial.r|axial.a|axial.z|reverse}.{w_q|w_k|w_v|w_pos}   (grp enabled only)
    head.classifier, head.bias

The module builders hand out views into the stored values, so an optimizer step on the
store is seen by the next forward pass without rebuilding anything.
"""

import logging
from collections import OrderedDict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Optional, Union

import numpy as np

from pyhub.polarocc.core.exceptions import DataError
from pyhub.polarocc.core.json_utils import json_dumps, json_loads_path
from pyhub.polarocc.fusion import FusionParams
from pyhub.polarocc.grp import WEIGHT_NAMES, AttentionWeights, GrpParams
from pyhub.polarocc.head import HeadParams
from pyhub.polarocc.pdconv import BackboneStage, DecomposedKernelSet, kernel_shape
from pyhub.polarocc.tensor import Array, DualArray, dumps_array, read_array_records
from pyhub.polarocc.voxelize import N_CHANNELS

from .config import ModelConfig

logger = logging.getLogger(__name__)

GRP_MODULES = ("local", "axial.r", "axial.a", "axial.z", "reverse")


@dataclass(frozen=True)
class ParamSlot:
    shape: tuple[int, ...]
    fan_in: int


def _fan_in(shape: tuple[int, ...]) -> int:
    # 커널 [kr, ka, kz, Cin, Cout] / 행렬 [Cin, Cout]
    return int(np.prod(shape[:-1])) if len(shape) > 1 else int(shape[0])


def param_layout(cfg: ModelConfig) -> "OrderedDict[str, ParamSlot]":
    """Name → (shape, fan_in) for every learnable tensor of ``cfg``, in canonical order."""
    c = cfg.channels
    layout: OrderedDict[str, ParamSlot] = OrderedDict()

    def add(name: str, shape: tuple[int, ...], fan_in: Optional[int] = None) -> None:
        layout[name] = ParamSlot(tuple(shape), fan_in if fan_in is not None else _fan_in(shape))

    add("stem.w", (1, 1, 1, N_CHANNELS, c))
    add("stem.b", (c,), N_CHANNELS)
    if cfg.fused():
        shapes = FusionParams.shapes(c, cfg.fusion.hidden)
        add("fusion.gate_kernel", shapes["gate_kernel"])
        add("fusion.gate_proj", shapes["gate_proj"])
        add("fusion.gate_bias", shapes["gate_bias"], cfg.fusion.hidden)
    stack = cfg.pd_stack()
    for i, _ in enumerate(cfg.schedule()):
        for name in stack.kernel_names():
            add(f"backbone.{i}.{name}", kernel_shape(name, c))
    if cfg.grp.enable:
        for module in GRP_MODULES:
            for weight, shape in AttentionWeights.shapes(c).items():
                add(f"grp.{module}.{weight}", shape)
    add("head.classifier", (c, cfg.n_classes))
    add("head.bias", (cfg.n_classes,), c)
    return layout


class ParamStore:
    def __init__(self, params: "OrderedDict[str, DualArray]"):
        self.params = params

    def __getitem__(self, name: str) -> DualArray:
        return self.params[name]

    def __contains__(self, name: str) -> bool:
        return name in self.params

    def __iter__(self) -> Iterator[str]:
        return iter(self.params)

    def __len__(self) -> int:
        return len(self.params)

    def names(self) -> list[str]:
        return list(self.params)

    def items(self):
        return self.params.items()

    def value(self, name: str) -> Array:
        return self.params[name].value

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.zero_grad()

    def accumulate(self, name: str, grad: Array) -> None:
        self.params[name].grad += grad

    def n_params(self) -> int:
        return sum(p.value.size for p in self.params.values())

    def grad_norm(self) -> float:
        return float(np.sqrt(sum(float(np.sum(p.grad * p.grad)) for p in self.params.values())))

    def copy(self) -> "ParamStore":
        return ParamStore(OrderedDict((name, DualArray(p.value.copy())) for name, p in self.params.items()))

    def snapshot(self) -> dict[str, Array]:
        return {name: p.value.copy() for name, p in self.params.items()}

    #
    # initialization
    #

    @classmethod
    def initialize(cls, cfg: ModelConfig, seed: Optional[int] = None) -> "ParamStore":
        """Seeded uniform init in [−b, b] with b = 1/√fan_in, drawn in layout order."""
        rng = np.random.default_rng(cfg.seed if seed is None else seed)
        params = OrderedDict()
        for name, slot in param_layout(cfg).items():
            bound = 1.0 / np.sqrt(slot.fan_in)
            params[name] = DualArray(rng.uniform(-bound, bound, size=slot.shape))
        logger.debug("initialized %d tensors (%d values)", len(params), sum(p.value.size for p in params.values()))
        return cls(params)

    @classmethod
    def zeros(cls, cfg: ModelConfig) -> "ParamStore":
        return cls(OrderedDict((name, DualArray(np.zeros(slot.shape))) for name, slot in param_layout(cfg).items()))

    #
    # module builders (views into the store)
    #

    def stem(self) -> tuple[Array, Array]:
        return self.value("stem.w"), self.value("stem.b")

    def fusion(self) -> FusionParams:
        return FusionParams(
            gate_kernel=self.value("fusion.gate_kernel"),
            gate_proj=self.value("fusion.gate_proj"),
            gate_bias=self.value("fusion.gate_bias"),
        )

    def backbone(self, cfg: ModelConfig) -> list[BackboneStage]:
        stack = cfg.pd_stack()
        stages = []
        for i, stride in enumerate(cfg.schedule()):
            kernels = DecomposedKernelSet({name: self.value(f"backbone.{i}.{name}") for name in stack.kernel_names()})
            stages.append(BackboneStage(kernels=kernels, cfg=stack, stride=stride))
        return stages

    def grp(self, cfg: ModelConfig) -> GrpParams:
        modules = {
            module: AttentionWeights(*(self.value(f"grp.{module}.{w}") for w in WEIGHT_NAMES)) for module in GRP_MODULES
        }
        return GrpParams(
            local=modules["local"],
            axial={axis: modules[f"axial.{axis}"] for axis in ("r", "a", "z")},
            reverse=modules["reverse"],
            window=cfg.grp.window_s,
            literal_eq=cfg.grp.literal_eq,
        )

    def head(self) -> HeadParams:
        return HeadParams(classifier=self.value("head.classifier"), bias=self.value("head.bias"))

    #
    # checkpoint
    #

    def save(self, path: Union[str, Path]) -> tuple[Path, Path]:
        """Consecutive PVOARR1 records in name order plus a ``.names.json`` manifest."""
        path = Path(path)
        path.write_bytes(b"".join(dumps_array(p.value) for p in self.params.values()))
        names_path = path.with_name(path.name + ".names.json")
        names_path.write_text(json_dumps(self.names()), encoding="utf-8")
        return path, names_path

    @classmethod
    def load(cls, path: Union[str, Path], cfg: Optional[ModelConfig] = None) -> "ParamStore":
        path = Path(path)
        names = json_loads_path(path.with_name(path.name + ".names.json"))
        records = read_array_records(path)
        if not isinstance(names, list) or len(names) != len(records):
            raise DataError(f"{path}: names manifest does not match {len(records)} array records")
        store = cls(OrderedDict((str(name), DualArray(array)) for name, array in zip(names, records)))
        if cfg is not None:
            store.check(cfg)
        return store

    def check(self, cfg: ModelConfig) -> None:
        layout = param_layout(cfg)
        if list(layout) != self.names():
            missing = sorted(set(layout) - set(self.params))
            extra = sorted(set(self.params) - set(layout))
            raise DataError(f"parameter names do not match the config (missing={missing}, unexpected={extra})")
        for name, slot in layout.items():
            if self.params[name].shape != slot.shape:
                raise DataError(f"parameter {name!r} has shape {self.params[name].shape}, expected {slot.shape}")

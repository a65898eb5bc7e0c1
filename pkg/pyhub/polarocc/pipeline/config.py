"""Model / experiment configuration.

A JSON file validated with pydantic. Validation failures surface as ``ConfigValidationError``
naming the dotted key that failed.
"""

import logging
from pathlib import Path
from typing import Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from pyhub.polarocc.core.choices import FusionMode, GridPreset, Topology
from pyhub.polarocc.core.exceptions import ConfigError, ConfigValidationError
from pyhub.polarocc.core.json_utils import json_loads_path
from pyhub.polarocc.geometry import (
    CartesianGridSpec,
    GridSpec,
    PolarGridSpec,
    cartesian_twin,
    get_preset,
)
from pyhub.polarocc.pdconv import DESK_SCHEDULE, FULL_SCHEDULE, PdStackConfig, schedule_shapes, total_stride

logger = logging.getLogger(__name__)

PRESET_SCHEDULES = {
    GridPreset.FULL: FULL_SCHEDULE,
    GridPreset.DESK: DESK_SCHEDULE,
    GridPreset.TINY: [(1, 1, 1)],
}


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GridConfig(_Section):
    preset: GridPreset = GridPreset.DESK
    polar: Optional[dict] = None
    cartesian: Optional[dict] = None


class PdConvConfig(_Section):
    enable: bool = True
    topology: Topology = Topology.SERIAL
    order: list[str] = Field(default_factory=lambda: ["r", "a", "z"])

    @field_validator("order")
    @classmethod
    def _permutation(cls, value: list[str]) -> list[str]:
        if sorted(value) != ["a", "r", "z"]:
            raise ValueError("must be a permutation of r, a, z")
        return value


class GrpConfig(_Section):
    enable: bool = True
    window_s: int = Field(default=2, ge=1)
    literal_eq: bool = False


class FusionConfig(_Section):
    mode: FusionMode = FusionMode.LIDAR_ONLY
    hidden: int = Field(default=4, ge=1)


class BackboneConfig(_Section):
    schedule: Optional[list[tuple[int, int, int]]] = None


class TrainConfig(_Section):
    lr: float = Field(default=1e-2, ge=0)
    steps: int = Field(default=200, ge=0)
    weight_decay: float = Field(default=0.01, ge=0)
    beta1: float = Field(default=0.9, ge=0, lt=1)
    beta2: float = Field(default=0.999, ge=0, lt=1)
    eps: float = Field(default=1e-8, gt=0)
    free_weight: float = Field(default=0.2, ge=0)


class LidarConfig(_Section):
    n_beams: int = Field(default=32, ge=1)
    points_per_beam: int = Field(default=360, ge=1)


class DatasetConfig(_Section):
    train_scenes: int = Field(default=16, ge=1)
    val_scenes: int = Field(default=4, ge=0)


class ModelConfig(_Section):
    grid: GridConfig = Field(default_factory=GridConfig)
    channels: int = Field(default=8, ge=1)
    n_classes: int = Field(default=8, ge=2, le=65536)
    seed: int = 0
    polar: bool = True
    pdconv: PdConvConfig = Field(default_factory=PdConvConfig)
    grp: GrpConfig = Field(default_factory=GrpConfig)
    fusion: FusionConfig = Field(default_factory=FusionConfig)
    backbone: BackboneConfig = Field(default_factory=BackboneConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)
    lidar: LidarConfig = Field(default_factory=LidarConfig)
    dataset: DatasetConfig = Field(default_factory=DatasetConfig)

    #
    # resolved grids
    #

    def polar_spec(self) -> PolarGridSpec:
        polar, _ = get_preset(self.grid.preset)
        return polar if self.grid.polar is None else PolarGridSpec.from_dict(self.grid.polar)

    def output_spec(self) -> CartesianGridSpec:
        _, cartesian = get_preset(self.grid.preset)
        return cartesian if self.grid.cartesian is None else CartesianGridSpec.from_dict(self.grid.cartesian)

    def working_spec(self) -> GridSpec:
        """Polar grid, or its equal-voxel-count Cartesian twin when polar is off."""
        polar = self.polar_spec()
        return polar if self.polar else cartesian_twin(polar)

    def schedule(self) -> list[tuple[int, int, int]]:
        if self.backbone.schedule is not None:
            return [tuple(s) for s in self.backbone.schedule]
        return list(PRESET_SCHEDULES[GridPreset(self.grid.preset)])

    def final_spec(self) -> GridSpec:
        return self.working_spec().coarsen(total_stride(self.schedule()))

    def pd_stack(self) -> PdStackConfig:
        topology = self.pdconv.topology if self.pdconv.enable else Topology.NAIVE
        return PdStackConfig(topology=topology, order=tuple(self.pdconv.order), padding=self.working_spec().padding)

    def fused(self) -> bool:
        return self.fusion.mode == FusionMode.FUSED

    def check(self) -> "ModelConfig":
        """Cross-field checks that pydantic cannot express per field."""
        try:
            polar = self.polar_spec()
        except ConfigError as e:
            raise ConfigValidationError("grid.polar", str(e)) from e
        try:
            self.output_spec()
        except ConfigError as e:
            raise ConfigValidationError("grid.cartesian", str(e)) from e
        try:
            schedule_shapes(polar.bins, self.schedule())
        except ConfigError as e:
            raise ConfigValidationError("backbone.schedule", str(e)) from e
        return self

    def variant(self, **updates) -> "ModelConfig":
        """Copy with dotted-key updates, e.g. ``variant(**{"grp.enable": False})``."""
        data = self.model_dump(mode="json")
        for key, value in updates.items():
            node = data
            *parents, leaf = key.split(".")
            for part in parents:
                node = node[part]
            node[leaf] = value
        return config_from_dict(data)


def _dotted(loc: tuple) -> str:
    return ".".join(str(part) for part in loc) or "<root>"


def config_from_dict(data: dict) -> ModelConfig:
    try:
        cfg = ModelConfig.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        raise ConfigValidationError(_dotted(first["loc"]), first["msg"]) from e
    return cfg.check()


def load_config(path: Union[str, Path, None]) -> ModelConfig:
    if path is None:
        return config_from_dict({})
    data = json_loads_path(Path(path))
    if not isinstance(data, dict):
        raise ConfigValidationError("<root>", "config file must hold a JSON object")
    logger.debug("loaded config %s", path)
    return config_from_dict(data)

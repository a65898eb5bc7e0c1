from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from pyhub.polarocc.core.exceptions import DimensionError
from pyhub.polarocc.geometry import GridSpec


@dataclass
class VoxelizeDiagnostics:
    n_points: int = 0
    n_in_range: int = 0
    n_dropped: int = 0
    n_occupied: int = 0


@dataclass
class FeatureVolume:
    """Dense [R, A, Z, C] features on a grid plus an occupancy mask."""

    spec: GridSpec
    data: np.ndarray
    mask: Optional[np.ndarray] = None
    diagnostics: Optional[VoxelizeDiagnostics] = field(default=None, compare=False)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 4 or self.data.shape[:3] != tuple(self.spec.bins):
            raise DimensionError("FeatureVolume", self.data.shape, tuple(self.spec.bins) + ("C",))
        if self.mask is None:
            self.mask = np.any(self.data != 0.0, axis=-1)
        else:
            self.mask = np.asarray(self.mask, dtype=bool)
            if self.mask.shape != self.data.shape[:3]:
                raise DimensionError("FeatureVolume.mask", self.mask.shape, self.data.shape[:3])

    @property
    def channels(self) -> int:
        return self.data.shape[3]

    @property
    def shape(self) -> tuple:
        return self.data.shape

    def with_data(self, data: np.ndarray) -> "FeatureVolume":
        return FeatureVolume(spec=self.spec, data=data, mask=self.mask)

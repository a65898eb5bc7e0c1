"""Stand-in camera features: a seeded per-class vector plus noise on every occupied voxel.

Truth is taken at each working-grid voxel center (polar bins in polar mode), not resampled
from the Cartesian truth grid.
"""

import logging

import numpy as np

from pyhub.polarocc.geometry import GridSpec, PolarGridSpec, polar_to_cart_arrays
from pyhub.polarocc.voxelize import FeatureVolume

from .scene import SceneSpec, label_points

logger = logging.getLogger(__name__)

CAMERA_NOISE = 0.1


def grid_truth(scene: SceneSpec, spec: GridSpec) -> np.ndarray:
    """Scene labels at every voxel center of a polar or Cartesian grid, shape ``spec.bins``."""
    centers = spec.center_grid()
    if isinstance(spec, PolarGridSpec):
        x, y = polar_to_cart_arrays(centers[..., 0], centers[..., 1])
        centers = np.stack([x, y, centers[..., 2]], axis=-1)
    return label_points(scene, centers)


def synthesize_camera_volume(scene: SceneSpec, spec: GridSpec, channels: int, seed: int) -> FeatureVolume:
    rng = np.random.default_rng(seed)
    basis = rng.normal(size=(scene.n_classes, channels))
    noise = CAMERA_NOISE * rng.normal(size=tuple(spec.bins) + (channels,))
    labels = grid_truth(scene, spec)
    occupied = labels > 0
    data = np.where(occupied[..., None], basis[labels] + noise, 0.0)
    return FeatureVolume(spec=spec, data=data, mask=occupied)

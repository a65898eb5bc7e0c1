from .camera import CAMERA_NOISE, grid_truth, synthesize_camera_volume
from .lidar import (
    DEFAULT_ELEVATION,
    RANGE_NOISE_SIGMA,
    REFLECTANCE,
    beam_directions,
    cast_rays,
    simulate_lidar,
)
from .scene import (
    N_CLASSES,
    Box,
    Cylinder,
    Primitive,
    SceneSpec,
    generate_scene,
    label_points,
    primitive_from_dict,
    rasterize_truth,
)

__all__ = [
    "CAMERA_NOISE",
    "DEFAULT_ELEVATION",
    "N_CLASSES",
    "RANGE_NOISE_SIGMA",
    "REFLECTANCE",
    "Box",
    "Cylinder",
    "Primitive",
    "SceneSpec",
    "beam_directions",
    "cast_rays",
    "generate_scene",
    "grid_truth",
    "label_points",
    "primitive_from_dict",
    "rasterize_truth",
    "simulate_lidar",
    "synthesize_camera_volume",
]

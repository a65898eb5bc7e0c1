from .grids import (
    PRESETS,
    CartesianGridSpec,
    GridSpec,
    PolarGridSpec,
    cartesian_twin,
    get_preset,
)
from .transforms import (
    TWO_PI,
    CartPoint,
    PolarPoint,
    cart_to_polar,
    cart_to_polar_arrays,
    normalize_angle,
    normalize_angles,
    polar_to_cart,
    polar_to_cart_arrays,
)

__all__ = [
    "PRESETS",
    "TWO_PI",
    "CartPoint",
    "CartesianGridSpec",
    "GridSpec",
    "PolarGridSpec",
    "PolarPoint",
    "cart_to_polar",
    "cart_to_polar_arrays",
    "cartesian_twin",
    "get_preset",
    "normalize_angle",
    "normalize_angles",
    "polar_to_cart",
    "polar_to_cart_arrays",
]

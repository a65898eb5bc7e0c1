"""Procedural scenes built from labeled solids.

Two primitive kinds: yawed boxes and vertical cylinders. A point's label is the class of the
last listed primitive that contains it; primitives are closed sets.
"""

import logging
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from pyhub.polarocc.core.choices import SemanticClass
from pyhub.polarocc.core.exceptions import DataError
from pyhub.polarocc.geometry import CartesianGridSpec
from pyhub.polarocc.head import SemanticGrid

logger = logging.getLogger(__name__)

N_CLASSES = len(SemanticClass.values)
# 경계면 판정 허용 오차
_EPS = 1e-9


def _triple(value, name: str) -> tuple[float, float, float]:
    try:
        out = tuple(float(v) for v in value)
    except (TypeError, ValueError) as e:
        raise DataError(f"{name} must be three numbers, got {value!r}") from e
    if len(out) != 3:
        raise DataError(f"{name} must be three numbers, got {value!r}")
    return out


@dataclass(frozen=True)
class Box:
    center: tuple[float, float, float]
    size: tuple[float, float, float]
    label: int
    yaw: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "center", _triple(self.center, "box center"))
        object.__setattr__(self, "size", _triple(self.size, "box size"))
        object.__setattr__(self, "label", int(self.label))
        object.__setattr__(self, "yaw", float(self.yaw))
        if any(s <= 0 for s in self.size):
            raise DataError(f"box size must be positive, got {self.size}")

    def _local(self, points: np.ndarray) -> np.ndarray:
        c, s = np.cos(self.yaw), np.sin(self.yaw)
        d = points - np.asarray(self.center)
        return np.stack([c * d[..., 0] + s * d[..., 1], -s * d[..., 0] + c * d[..., 1], d[..., 2]], axis=-1)

    def _local_dirs(self, dirs: np.ndarray) -> np.ndarray:
        c, s = np.cos(self.yaw), np.sin(self.yaw)
        return np.stack([c * dirs[..., 0] + s * dirs[..., 1], -s * dirs[..., 0] + c * dirs[..., 1], dirs[..., 2]], -1)

    def contains(self, points: np.ndarray) -> np.ndarray:
        half = np.asarray(self.size) / 2 + _EPS
        return np.all(np.abs(self._local(np.asarray(points, dtype=np.float64))) <= half, axis=-1)

    def intersect(self, origin: np.ndarray, dirs: np.ndarray) -> np.ndarray:
        """Entry distance along each ray (slab method); inf on a miss or from inside."""
        o = self._local(np.asarray(origin, dtype=np.float64)[None, :])[0]
        d = self._local_dirs(np.asarray(dirs, dtype=np.float64))
        half = np.asarray(self.size) / 2
        t_near = np.full(len(d), -np.inf)
        t_far = np.full(len(d), np.inf)
        for axis in range(3):
            da = d[:, axis]
            parallel = da == 0.0
            inside = abs(o[axis]) <= half[axis]
            with np.errstate(divide="ignore", invalid="ignore"):
                t1 = (-half[axis] - o[axis]) / da
                t2 = (half[axis] - o[axis]) / da
            lo = np.where(parallel, -np.inf if inside else np.inf, np.minimum(t1, t2))
            hi = np.where(parallel, np.inf if inside else -np.inf, np.maximum(t1, t2))
            t_near = np.maximum(t_near, lo)
            t_far = np.minimum(t_far, hi)
        hit = (t_near <= t_far) & (t_near > 0)
        return np.where(hit, t_near, np.inf)

    def bounds(self) -> np.ndarray:
        """[2, 3] axis-aligned bounding box."""
        c, s = abs(np.cos(self.yaw)), abs(np.sin(self.yaw))
        dx, dy, dz = self.size
        extent = np.array([c * dx + s * dy, s * dx + c * dy, dz]) / 2
        return np.stack([np.asarray(self.center) - extent, np.asarray(self.center) + extent])

    def to_dict(self) -> dict:
        return {
            "kind": "box",
            "center": list(self.center),
            "size": list(self.size),
            "yaw": self.yaw,
            "label": self.label,
        }


@dataclass(frozen=True)
class Cylinder:
    center: tuple[float, float]
    radius: float
    z_range: tuple[float, float]
    label: int

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(v) for v in self.center))
        object.__setattr__(self, "z_range", tuple(float(v) for v in self.z_range))
        object.__setattr__(self, "label", int(self.label))
        object.__setattr__(self, "radius", float(self.radius))
        if len(self.center) != 2 or self.radius <= 0 or not self.z_range[1] > self.z_range[0]:
            raise DataError(f"invalid cylinder: center={self.center} radius={self.radius} z={self.z_range}")

    def contains(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=np.float64)
        radial = np.hypot(points[..., 0] - self.center[0], points[..., 1] - self.center[1])
        z = points[..., 2]
        return (radial <= self.radius + _EPS) & (z >= self.z_range[0] - _EPS) & (z <= self.z_range[1] + _EPS)

    def intersect(self, origin: np.ndarray, dirs: np.ndarray) -> np.ndarray:
        """Entry distance through the side or a cap; inf on a miss or from inside."""
        o = np.asarray(origin, dtype=np.float64)
        d = np.asarray(dirs, dtype=np.float64)
        if self.contains(o[None, :])[0]:
            return np.full(len(d), np.inf)
        ox, oy = o[0] - self.center[0], o[1] - self.center[1]
        a = d[:, 0] ** 2 + d[:, 1] ** 2
        b = 2.0 * (ox * d[:, 0] + oy * d[:, 1])
        c = ox * ox + oy * oy - self.radius**2
        disc = b * b - 4.0 * a * c
        best = np.full(len(d), np.inf)
        with np.errstate(divide="ignore", invalid="ignore"):
            t_side = (-b - np.sqrt(np.maximum(disc, 0.0))) / (2.0 * a)
            z_side = o[2] + t_side * d[:, 2]
            ok = (a > 0) & (disc >= 0) & (t_side > 0) & (z_side >= self.z_range[0]) & (z_side <= self.z_range[1])
            best = np.where(ok, t_side, best)
            for z_cap in self.z_range:
                t_cap = (z_cap - o[2]) / d[:, 2]
                radial = np.hypot(ox + t_cap * d[:, 0], oy + t_cap * d[:, 1])
                ok = (d[:, 2] != 0) & (t_cap > 0) & (radial <= self.radius)
                best = np.where(ok & (t_cap < best), t_cap, best)
        return best

    def bounds(self) -> np.ndarray:
        cx, cy = self.center
        r = self.radius
        return np.array([[cx - r, cy - r, self.z_range[0]], [cx + r, cy + r, self.z_range[1]]])

    def to_dict(self) -> dict:
        return {
            "kind": "cylinder",
            "center": list(self.center),
            "radius": self.radius,
            "z_range": list(self.z_range),
            "label": self.label,
        }


Primitive = Union[Box, Cylinder]


def primitive_from_dict(data: dict) -> Primitive:
    try:
        kind = data["kind"]
        if kind == "box":
            return Box(data["center"], data["size"], int(data["label"]), float(data.get("yaw", 0.0)))
        if kind == "cylinder":
            return Cylinder(data["center"], float(data["radius"]), data["z_range"], int(data["label"]))
    except KeyError as e:
        raise DataError(f"primitive is missing key {e.args[0]!r}") from e
    raise DataError(f"unknown primitive kind {kind!r}")


@dataclass
class SceneSpec:
    seed: int
    primitives: list[Primitive] = field(default_factory=list)
    n_classes: int = N_CLASSES

    def __post_init__(self):
        for i, primitive in enumerate(self.primitives):
            if not 1 <= primitive.label < self.n_classes:
                raise DataError(f"primitive {i}: class id {primitive.label} outside [1, {self.n_classes})")

    def validate(self, spec: CartesianGridSpec) -> "SceneSpec":
        lows = np.array([lo for lo, _ in spec.ranges])
        highs = np.array([hi for _, hi in spec.ranges])
        for i, primitive in enumerate(self.primitives):
            lo, hi = primitive.bounds()
            if np.any(lo < lows - 1e-6) or np.any(hi > highs + 1e-6):
                raise DataError(f"primitive {i} ({primitive.to_dict()['kind']}) leaves the grid range")
        return self

    def to_dict(self) -> dict:
        return {"seed": self.seed, "n_classes": self.n_classes, "primitives": [p.to_dict() for p in self.primitives]}

    @classmethod
    def from_dict(cls, data: dict) -> "SceneSpec":
        try:
            return cls(
                seed=int(data["seed"]),
                primitives=[primitive_from_dict(p) for p in data.get("primitives", [])],
                n_classes=int(data.get("n_classes", N_CLASSES)),
            )
        except KeyError as e:
            raise DataError(f"scene is missing key {e.args[0]!r}") from e


def label_points(scene: SceneSpec, points: np.ndarray) -> np.ndarray:
    """Class of the last primitive containing each point; 0 (free) elsewhere."""
    points = np.asarray(points, dtype=np.float64)
    labels = np.zeros(points.shape[:-1], dtype=np.int64)
    for primitive in scene.primitives:
        labels[primitive.contains(points)] = primitive.label
    return labels


def rasterize_truth(scene: SceneSpec, spec: CartesianGridSpec) -> SemanticGrid:
    labels = label_points(scene, spec.center_grid())
    return SemanticGrid(spec=spec, labels=labels, n_classes=scene.n_classes)


def generate_scene(seed: int, spec: CartesianGridSpec) -> SceneSpec:
    """A street: terrain slab, road along x, two sidewalks, then buildings, trees, poles and cars."""
    rng = np.random.default_rng(seed)
    (x_lo, x_hi), (y_lo, y_hi), (z_lo, z_hi) = spec.ranges
    half_y = min(-y_lo, y_hi)
    scale = half_y / 12.8
    ground = z_lo + 0.375 * (z_hi - z_lo)
    length = x_hi - x_lo
    x_mid = 0.5 * (x_lo + x_hi)
    road = 0.22 * half_y
    walk = 0.12 * half_y
    slab_center_z = 0.5 * (z_lo + ground)
    slab_height = ground - z_lo

    primitives: list[Primitive] = [
        Box((x_mid, 0.5 * (y_lo + y_hi), slab_center_z), (length, y_hi - y_lo, slab_height), SemanticClass.TERRAIN),
        Box((x_mid, 0.0, slab_center_z), (length, 2 * road, slab_height), SemanticClass.ROAD),
    ]
    curb = min(0.15 * scale, 0.5 * (z_hi - ground))
    for sign in (-1.0, 1.0):
        primitives.append(
            Box(
                (x_mid, sign * (road + walk / 2), 0.5 * (z_lo + ground + curb)),
                (length, walk, slab_height + curb),
                SemanticClass.SIDEWALK,
            )
        )

    building_room = half_y - road - walk
    top = z_hi - 0.05 * (z_hi - z_lo)
    for _ in range(int(rng.integers(1, 4))):
        depth = rng.uniform(0.3, 0.8) * building_room
        width = rng.uniform(0.1, 0.3) * length
        sign = rng.choice([-1.0, 1.0])
        cx = rng.uniform(x_lo + width / 2, x_hi - width / 2)
        cy = sign * (half_y - depth / 2)
        height = rng.uniform(0.5, 1.0) * (top - ground)
        primitives.append(Box((cx, cy, ground + height / 2), (width, depth, height), SemanticClass.BUILDING))

    for _ in range(int(rng.integers(1, 3))):
        radius = rng.uniform(0.6, 1.2) * scale
        sign = rng.choice([-1.0, 1.0])
        cx = rng.uniform(x_lo + radius, x_hi - radius)
        cy = sign * (road + walk + radius)
        height = rng.uniform(0.4, 0.9) * (top - ground)
        primitives.append(Cylinder((cx, cy), radius, (ground, ground + height), SemanticClass.VEGETATION))

    for _ in range(int(rng.integers(1, 4))):
        radius = 0.15 * scale
        sign = rng.choice([-1.0, 1.0])
        cx = rng.uniform(x_lo + radius, x_hi - radius)
        cy = sign * (road + walk / 2)
        primitives.append(Cylinder((cx, cy), radius, (ground, top), SemanticClass.POLE))

    car = np.array([4.2, 1.8, 1.5]) * scale
    for _ in range(int(rng.integers(1, 4))):
        yaw = float(rng.uniform(-0.2, 0.2))
        reach = 0.5 * (abs(np.cos(yaw)) * car[0] + abs(np.sin(yaw)) * car[1])
        cx = rng.uniform(x_lo + reach, x_hi - reach)
        cy = rng.uniform(-0.5, 0.5) * road
        primitives.append(Box((cx, cy, ground + car[2] / 2), tuple(car), SemanticClass.CAR, yaw))

    scene = SceneSpec(seed=seed, primitives=primitives).validate(spec)
    logger.debug("scene %d: %d primitives", seed, len(scene.primitives))
    return scene

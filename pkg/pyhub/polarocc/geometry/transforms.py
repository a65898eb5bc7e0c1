import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class PolarPoint:
    r: float
    theta: float
    z: float


@dataclass(frozen=True)
class CartPoint:
    x: float
    y: float
    z: float


def normalize_angle(theta: float) -> float:
    """Map an angle to (−π, π]; angles already in range are returned unchanged."""
    if -math.pi < theta <= math.pi:
        return float(theta)
    t = math.fmod(theta + math.pi, TWO_PI)
    if t < 0:
        t += TWO_PI
    t -= math.pi
    return math.pi if t <= -math.pi else t


def normalize_angles(theta: np.ndarray) -> np.ndarray:
    theta = np.asarray(theta, dtype=np.float64)
    t = np.mod(theta + np.pi, TWO_PI) - np.pi
    t = np.where(t <= -np.pi, np.pi, t)
    return np.where((theta > -np.pi) & (theta <= np.pi), theta, t)


def cart_to_polar(p: CartPoint) -> PolarPoint:
    r = math.hypot(p.x, p.y)
    # 원점은 θ=0 으로 고정
    theta = 0.0 if r == 0.0 else normalize_angle(math.atan2(p.y, p.x))
    return PolarPoint(r=r, theta=theta, z=p.z)


def polar_to_cart(p: PolarPoint) -> CartPoint:
    return CartPoint(x=p.r * math.cos(p.theta), y=p.r * math.sin(p.theta), z=p.z)


def cart_to_polar_arrays(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized (x, y) -> (r, θ) with the same conventions as ``cart_to_polar``."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    r = np.hypot(x, y)
    theta = np.where(r == 0.0, 0.0, normalize_angles(np.arctan2(y, x)))
    return r, theta


def polar_to_cart_arrays(r: np.ndarray, theta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return r * np.cos(theta), r * np.sin(theta)

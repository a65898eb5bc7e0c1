"""Polar and Cartesian grid specifications.

Bins are half-open ``[lo, hi)`` except the last bin on each axis, which is closed.
The azimuth axis is circular and never out of range.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from pyhub.polarocc.core.choices import GridPreset, PaddingMode
from pyhub.polarocc.core.exceptions import ConfigError

from .transforms import TWO_PI, CartPoint, PolarPoint

logger = logging.getLogger(__name__)

Index = tuple[int, int, int]


def _as_range(value: Sequence[float], name: str) -> tuple[float, float]:
    try:
        lo, hi = (float(v) for v in value)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{name} must be a pair of numbers, got {value!r}") from e
    if not hi > lo:
        raise ConfigError(f"{name} must satisfy max > min, got {value!r}")
    return lo, hi


def _as_bins(value: Sequence[int]) -> tuple[int, int, int]:
    bins = tuple(int(v) for v in value)
    if len(bins) != 3 or any(b < 1 for b in bins):
        raise ConfigError(f"bins must be three counts >= 1, got {value!r}")
    return bins


def _uniform_bin(values: np.ndarray, lo: float, hi: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    values = np.asarray(values, dtype=np.float64)
    valid = (values >= lo) & (values <= hi)
    idx = np.floor((values - lo) / ((hi - lo) / n)).astype(np.int64)
    return np.clip(idx, 0, n - 1), valid


def _check_index(idx: Sequence[int], bins: Sequence[int]) -> Index:
    idx = tuple(int(i) for i in idx)
    if len(idx) != 3 or any(not 0 <= i < n for i, n in zip(idx, bins)):
        raise IndexError(f"voxel index {idx} outside grid {tuple(bins)}")
    return idx


@dataclass(frozen=True)
class PolarGridSpec:
    r_range: tuple[float, float]
    z_range: tuple[float, float]
    bins: tuple[int, int, int]
    theta_range: tuple[float, float] = (-math.pi, math.pi)
    # 단조 증가하는 반경 경계 테이블 (R + 1 개). 없으면 균등 분할
    r_edges: Optional[tuple[float, ...]] = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "r_range", _as_range(self.r_range, "r_range"))
        object.__setattr__(self, "z_range", _as_range(self.z_range, "z_range"))
        object.__setattr__(self, "theta_range", _as_range(self.theta_range, "theta_range"))
        object.__setattr__(self, "bins", _as_bins(self.bins))
        if self.r_range[0] <= 0:
            raise ConfigError(f"r_min must be positive, got {self.r_range[0]}")
        if not math.isclose(self.theta_range[1] - self.theta_range[0], TWO_PI, abs_tol=1e-12):
            raise ConfigError(f"theta_range must span 2π, got {self.theta_range}")
        if self.r_edges is not None:
            edges = tuple(float(e) for e in self.r_edges)
            if (
                len(edges) != self.bins[0] + 1
                or any(b <= a for a, b in zip(edges, edges[1:]))
                or not math.isclose(edges[0], self.r_range[0])
                or not math.isclose(edges[-1], self.r_range[1])
            ):
                raise ConfigError("r_edges must be R+1 increasing values spanning r_range")
            object.__setattr__(self, "r_edges", edges)

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.bins

    @property
    def widths(self) -> tuple[float, float, float]:
        (r0, r1), (t0, t1), (z0, z1) = self.r_range, self.theta_range, self.z_range
        R, A, Z = self.bins
        return (r1 - r0) / R, (t1 - t0) / A, (z1 - z0) / Z

    @property
    def padding(self) -> tuple[str, str, str]:
        return PaddingMode.ZERO, PaddingMode.WRAP, PaddingMode.ZERO

    @property
    def n_voxels(self) -> int:
        return int(np.prod(self.bins))

    #
    # axis math
    #

    def r_centers(self) -> np.ndarray:
        if self.r_edges is not None:
            edges = np.asarray(self.r_edges)
            return 0.5 * (edges[:-1] + edges[1:])
        return self.r_range[0] + (np.arange(self.bins[0]) + 0.5) * self.widths[0]

    def theta_centers(self) -> np.ndarray:
        return self.theta_range[0] + (np.arange(self.bins[1]) + 0.5) * self.widths[1]

    def z_centers(self) -> np.ndarray:
        return self.z_range[0] + (np.arange(self.bins[2]) + 0.5) * self.widths[2]

    def axis_centers(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.r_centers(), self.theta_centers(), self.z_centers()

    def r_index(self, r: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        if self.r_edges is None:
            return _uniform_bin(r, *self.r_range, self.bins[0])
        r = np.asarray(r, dtype=np.float64)
        valid = (r >= self.r_range[0]) & (r <= self.r_range[1])
        idx = np.searchsorted(np.asarray(self.r_edges), r, side="right") - 1
        return np.clip(idx, 0, self.bins[0] - 1), valid

    def theta_index(self, theta: np.ndarray) -> np.ndarray:
        t = np.mod(np.asarray(theta, dtype=np.float64) - self.theta_range[0], TWO_PI)
        return np.clip(np.floor(t / self.widths[1]).astype(np.int64), 0, self.bins[1] - 1)

    def index_arrays(self, r, theta, z) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Vectorized binning; returns (i_r, i_a, i_z, in_range)."""
        ir, r_ok = self.r_index(r)
        iz, z_ok = _uniform_bin(z, *self.z_range, self.bins[2])
        return ir, self.theta_index(theta), iz, r_ok & z_ok

    def voxel_index(self, p: PolarPoint) -> Optional[Index]:
        ir, ia, iz, ok = self.index_arrays(np.array([p.r]), np.array([p.theta]), np.array([p.z]))
        if not ok[0]:
            return None
        return int(ir[0]), int(ia[0]), int(iz[0])

    def voxel_center(self, idx: Sequence[int]) -> PolarPoint:
        ir, ia, iz = _check_index(idx, self.bins)
        return PolarPoint(
            r=float(self.r_centers()[ir]),
            theta=float(self.theta_centers()[ia]),
            z=float(self.z_centers()[iz]),
        )

    def center_grid(self) -> np.ndarray:
        """[R, A, Z, 3] array of (r, θ, z) voxel centers."""
        return np.stack(np.meshgrid(*self.axis_centers(), indexing="ij"), axis=-1)

    def max_center_radius(self) -> float:
        return float(self.r_centers()[-1])

    def coarsen(self, factors: Sequence[int]) -> "PolarGridSpec":
        """Same extent with bins divided by ``factors`` (backbone output grid)."""
        factors = _as_bins(factors)
        if any(n % f for n, f in zip(self.bins, factors)):
            raise ConfigError(f"bins {self.bins} not divisible by {factors}")
        edges = None if self.r_edges is None else self.r_edges[:: factors[0]]
        return PolarGridSpec(
            r_range=self.r_range,
            z_range=self.z_range,
            bins=tuple(n // f for n, f in zip(self.bins, factors)),
            theta_range=self.theta_range,
            r_edges=edges,
        )

    def to_dict(self) -> dict:
        data = {
            "r_range": list(self.r_range),
            "theta_range": list(self.theta_range),
            "z_range": list(self.z_range),
            "bins": list(self.bins),
        }
        if self.r_edges is not None:
            data["r_edges"] = list(self.r_edges)
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "PolarGridSpec":
        try:
            return cls(
                r_range=data["r_range"],
                z_range=data["z_range"],
                bins=data["bins"],
                theta_range=data.get("theta_range", (-math.pi, math.pi)),
                r_edges=data.get("r_edges"),
            )
        except KeyError as e:
            raise ConfigError(f"polar grid is missing key {e.args[0]!r}") from e


@dataclass(frozen=True)
class CartesianGridSpec:
    x_range: tuple[float, float]
    y_range: tuple[float, float]
    z_range: tuple[float, float]
    bins: tuple[int, int, int]

    def __post_init__(self):
        for name in ("x_range", "y_range", "z_range"):
            object.__setattr__(self, name, _as_range(getattr(self, name), name))
        object.__setattr__(self, "bins", _as_bins(self.bins))

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.bins

    @property
    def ranges(self) -> tuple[tuple[float, float], ...]:
        return self.x_range, self.y_range, self.z_range

    @property
    def widths(self) -> tuple[float, float, float]:
        return tuple((hi - lo) / n for (lo, hi), n in zip(self.ranges, self.bins))

    @property
    def padding(self) -> tuple[str, str, str]:
        return PaddingMode.ZERO, PaddingMode.ZERO, PaddingMode.ZERO

    @property
    def n_voxels(self) -> int:
        return int(np.prod(self.bins))

    def axis_centers(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return tuple(lo + (np.arange(n) + 0.5) * w for (lo, _), n, w in zip(self.ranges, self.bins, self.widths))

    def index_arrays(self, x, y, z) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        (ix, x_ok), (iy, y_ok), (iz, z_ok) = (
            _uniform_bin(v, lo, hi, n) for v, (lo, hi), n in zip((x, y, z), self.ranges, self.bins)
        )
        return ix, iy, iz, x_ok & y_ok & z_ok

    def voxel_index(self, p: CartPoint) -> Optional[Index]:
        ix, iy, iz, ok = self.index_arrays(np.array([p.x]), np.array([p.y]), np.array([p.z]))
        if not ok[0]:
            return None
        return int(ix[0]), int(iy[0]), int(iz[0])

    def voxel_center(self, idx: Sequence[int]) -> CartPoint:
        ix, iy, iz = _check_index(idx, self.bins)
        xs, ys, zs = self.axis_centers()
        return CartPoint(x=float(xs[ix]), y=float(ys[iy]), z=float(zs[iz]))

    def center_grid(self) -> np.ndarray:
        """[X, Y, Z, 3] array of (x, y, z) voxel centers."""
        return np.stack(np.meshgrid(*self.axis_centers(), indexing="ij"), axis=-1)

    def max_center_radius(self) -> float:
        xs, ys, _ = self.axis_centers()
        return float(np.max(np.hypot(*np.meshgrid(xs, ys, indexing="ij"))))

    def coarsen(self, factors: Sequence[int]) -> "CartesianGridSpec":
        factors = _as_bins(factors)
        if any(n % f for n, f in zip(self.bins, factors)):
            raise ConfigError(f"bins {self.bins} not divisible by {factors}")
        return CartesianGridSpec(
            x_range=self.x_range,
            y_range=self.y_range,
            z_range=self.z_range,
            bins=tuple(n // f for n, f in zip(self.bins, factors)),
        )

    def to_dict(self) -> dict:
        return {
            "x_range": list(self.x_range),
            "y_range": list(self.y_range),
            "z_range": list(self.z_range),
            "bins": list(self.bins),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CartesianGridSpec":
        try:
            return cls(x_range=data["x_range"], y_range=data["y_range"], z_range=data["z_range"], bins=data["bins"])
        except KeyError as e:
            raise ConfigError(f"cartesian grid is missing key {e.args[0]!r}") from e


GridSpec = Union[PolarGridSpec, CartesianGridSpec]


def cartesian_twin(spec: PolarGridSpec) -> CartesianGridSpec:
    """Cartesian working grid with the polar grid's voxel count, covering its disk."""
    r_max = spec.r_range[1]
    return CartesianGridSpec(x_range=(-r_max, r_max), y_range=(-r_max, r_max), z_range=spec.z_range, bins=spec.bins)


FULL_Z = (-5.0, 3.0)

PRESETS: dict[str, tuple[PolarGridSpec, CartesianGridSpec]] = {
    GridPreset.FULL: (
        PolarGridSpec(r_range=(0.3, 73.0), z_range=FULL_Z, bins=(1024, 1344, 80)),
        CartesianGridSpec(x_range=(-51.2, 51.2), y_range=(-51.2, 51.2), z_range=FULL_Z, bins=(512, 512, 40)),
    ),
    GridPreset.DESK: (
        PolarGridSpec(r_range=(0.3, 73.0), z_range=FULL_Z, bins=(64, 84, 10)),
        CartesianGridSpec(x_range=(-12.8, 12.8), y_range=(-12.8, 12.8), z_range=FULL_Z, bins=(64, 64, 10)),
    ),
    GridPreset.TINY: (
        PolarGridSpec(r_range=(0.3, 8.0), z_range=(-2.0, 2.0), bins=(4, 4, 2)),
        CartesianGridSpec(x_range=(-4.0, 4.0), y_range=(-4.0, 4.0), z_range=(-2.0, 2.0), bins=(4, 4, 2)),
    ),
}


def get_preset(name: str) -> tuple[PolarGridSpec, CartesianGridSpec]:
    try:
        return PRESETS[GridPreset(name)]
    except ValueError as e:
        raise ConfigError(f"unknown grid preset {name!r}; choices: {GridPreset.values}") from e

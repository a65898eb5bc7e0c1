"""Range-banded occupancy statistics (how voxel density changes with distance)."""

from dataclasses import dataclass

import numpy as np

from pyhub.polarocc.core.exceptions import ConfigError
from pyhub.polarocc.geometry import GridSpec, PolarGridSpec

from .cloud import PointCloud
from .voxelizer import voxel_point_counts


@dataclass
class HistogramRow:
    band: int
    r_lo: float
    r_hi: float
    occupied_voxels: int
    points: int
    points_per_occupied_voxel: float


def center_radii(spec: GridSpec) -> np.ndarray:
    """BEV radius of every voxel center, shape ``spec.bins``."""
    if isinstance(spec, PolarGridSpec):
        r = spec.r_centers()[:, None, None]
        return np.broadcast_to(r, spec.bins).copy()
    xs, ys, _ = spec.axis_centers()
    bev = np.hypot(xs[:, None], ys[None, :])
    return np.broadcast_to(bev[:, :, None], spec.bins).copy()


def band_index(spec: GridSpec, n_bands: int) -> tuple[np.ndarray, np.ndarray]:
    """Equal-width bands over [0, max center radius]; returns (band per voxel, band edges)."""
    if n_bands < 1:
        raise ConfigError(f"n_range_bands must be >= 1, got {n_bands}")
    radii = center_radii(spec)
    top = float(radii.max())
    edges = np.linspace(0.0, top, n_bands + 1)
    bands = np.clip(np.floor(radii / (top / n_bands)).astype(np.int64), 0, n_bands - 1)
    return bands, edges


def occupancy_histogram(pc: PointCloud, spec: GridSpec, n_range_bands: int) -> list[HistogramRow]:
    bands, edges = band_index(spec, n_range_bands)
    counts = voxel_point_counts(pc, spec)
    occupied = counts > 0
    rows = []
    for band in range(n_range_bands):
        in_band = bands == band
        n_occupied = int(np.count_nonzero(occupied & in_band))
        n_points = int(counts[in_band].sum())
        rows.append(
            HistogramRow(
                band=band,
                r_lo=float(edges[band]),
                r_hi=float(edges[band + 1]),
                occupied_voxels=n_occupied,
                points=n_points,
                points_per_occupied_voxel=n_points / n_occupied if n_occupied else 0.0,
            )
        )
    return rows


def density_ratio(rows: list[HistogramRow]) -> float:
    """max/min points-per-occupied-voxel over bands that have any occupied voxel."""
    values = [row.points_per_occupied_voxel for row in rows if row.occupied_voxels]
    if not values:
        return 1.0
    return max(values) / min(values)

"""Mean-pooling voxelizer.

Channel layout of the output (C = 10)::

    0 r   1 θ   2 x   3 y   4 z   5 i   6 Δa0   7 Δa1   8 Δa2   9 log(1 + count)

Δ is the mean point minus the voxel center along the grid's own axes: (r, θ, z) on a polar
grid, (x, y, z) on a Cartesian grid.
"""

import logging

import numpy as np

from pyhub.polarocc.geometry import GridSpec, PolarGridSpec, normalize_angles

from .cloud import PointCloud
from .volume import FeatureVolume, VoxelizeDiagnostics

logger = logging.getLogger(__name__)

N_CHANNELS = 10

CHANNEL_NAMES = ("r", "theta", "x", "y", "z", "i", "d0", "d1", "d2", "log_count")


def _grid_coordinates(pc: PointCloud, spec: GridSpec) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if isinstance(spec, PolarGridSpec):
        return pc.r, pc.theta, pc.z
    return pc.x, pc.y, pc.z


def voxelize_points(pc: PointCloud, spec: GridSpec) -> FeatureVolume:
    """Scatter points into ``spec`` and average per voxel.

    Points inside a voxel are summed in a canonical (coordinate-sorted) order, so the result
    does not depend on the order of points in the cloud.
    """
    shape = tuple(spec.bins)
    data = np.zeros(shape + (N_CHANNELS,))
    mask = np.zeros(shape, dtype=bool)
    diagnostics = VoxelizeDiagnostics(n_points=len(pc))

    if len(pc) == 0:
        return FeatureVolume(spec=spec, data=data, mask=mask, diagnostics=diagnostics)

    a0, a1, a2 = _grid_coordinates(pc, spec)
    i0, i1, i2, in_range = spec.index_arrays(a0, a1, a2)
    diagnostics.n_in_range = int(in_range.sum())
    diagnostics.n_dropped = len(pc) - diagnostics.n_in_range
    if diagnostics.n_dropped:
        logger.debug("voxelize: dropped %d of %d points outside the grid", diagnostics.n_dropped, len(pc))
    if diagnostics.n_in_range == 0:
        return FeatureVolume(spec=spec, data=data, mask=mask, diagnostics=diagnostics)

    points = pc.points[in_range]
    idx = (i0[in_range], i1[in_range], i2[in_range])
    flat = np.ravel_multi_index(idx, shape)

    centers = [c[i] for c, i in zip(spec.axis_centers(), idx)]
    coords = [a0[in_range], a1[in_range].copy(), a2[in_range]]
    features = points.copy()
    if isinstance(spec, PolarGridSpec):
        # θ 는 복셀 중심 기준으로 펼쳐서 평균이 항상 해당 bin 안에 머물도록 함
        coords[1] = centers[1] + normalize_angles(coords[1] - centers[1])
        features[:, 1] = coords[1]
    offsets = np.column_stack([c - m for c, m in zip(coords, centers)])
    features = np.column_stack([features, offsets])

    order = np.lexsort((points[:, 5], points[:, 4], points[:, 3], points[:, 2], flat))
    flat_sorted = flat[order]
    starts = np.flatnonzero(np.r_[True, flat_sorted[1:] != flat_sorted[:-1]])
    sums = np.add.reduceat(features[order], starts, axis=0)
    counts = np.diff(np.r_[starts, flat_sorted.size])
    voxels = flat_sorted[starts]

    flat_data = data.reshape(-1, N_CHANNELS)
    flat_data[voxels, :9] = sums / counts[:, None]
    flat_data[voxels, 9] = np.log1p(counts)
    mask.reshape(-1)[voxels] = True
    diagnostics.n_occupied = int(voxels.size)

    return FeatureVolume(spec=spec, data=data, mask=mask, diagnostics=diagnostics)


def voxel_point_counts(pc: PointCloud, spec: GridSpec) -> np.ndarray:
    """Number of in-range points per voxel, shape ``spec.bins``."""
    counts = np.zeros(int(np.prod(spec.bins)), dtype=np.int64)
    if len(pc) == 0:
        return counts.reshape(spec.bins)
    i0, i1, i2, ok = spec.index_arrays(*_grid_coordinates(pc, spec))
    flat = np.ravel_multi_index((i0[ok], i1[ok], i2[ok]), tuple(spec.bins))
    np.add.at(counts, flat, 1)
    return counts.reshape(spec.bins)


def normalize_features(volume: FeatureVolume) -> np.ndarray:
    """Scale voxel channels by fixed grid constants so every channel is O(1)."""
    spec = volume.spec
    z_lo, z_hi = spec.z_range
    if isinstance(spec, PolarGridSpec):
        r_scale = spec.r_range[1]
    else:
        r_scale = max(abs(v) for v in spec.x_range + spec.y_range)
    widths = spec.widths
    scale = np.array([r_scale, np.pi, r_scale, r_scale, z_hi - z_lo, 1.0, widths[0], widths[1], widths[2], 1.0])
    shift = np.array([0.0, 0.0, 0.0, 0.0, 0.5 * (z_lo + z_hi), 0, 0, 0, 0, 0])
    out = (volume.data - shift) / scale
    # 비어 있는 복셀은 0 으로 유지
    return np.where(volume.mask[..., None], out, 0.0)

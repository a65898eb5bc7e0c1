"""Relative positions between voxels for the positional bias E(p).

Every offset is a 5-vector ``[Δr, Δθ·r̄, Δz, Δx, Δy]``. Voxels are addressed by integer
indices in the grid's original (unpadded) coordinates; indices in the zero-padding halo are
negative or past the last bin and are extrapolated linearly.
"""

from dataclasses import dataclass
from typing import Union

import numpy as np

from pyhub.polarocc.core.choices import PaddingMode
from pyhub.polarocc.geometry import CartesianGridSpec, PolarGridSpec, normalize_angles

OFFSET_DIM = 5


@dataclass(frozen=True)
class PolarOffsets:
    """Offsets on a polar grid, computed from index differences.

    The azimuth difference is wrapped to the nearest direction and (Δx, Δy) are taken in the
    query's radial frame, so offsets are invariant to rotating both voxels by whole bins.
    """

    spec: PolarGridSpec

    @property
    def wrap_axes(self) -> tuple[bool, bool, bool]:
        return tuple(mode == PaddingMode.WRAP for mode in self.spec.padding)

    def _radius(self, i_r: np.ndarray) -> np.ndarray:
        return self.spec.r_range[0] + (i_r + 0.5) * self.spec.widths[0]

    def offsets(self, query: np.ndarray, key: np.ndarray) -> np.ndarray:
        """query, key: integer index arrays [..., 3] (broadcastable) -> [..., 5]"""
        w_r, w_a, w_z = self.spec.widths
        n_a = self.spec.bins[1]
        query = np.asarray(query)
        key = np.asarray(key)
        da = np.mod(key[..., 1] - query[..., 1] + n_a // 2, n_a) - n_a // 2
        r_q = self._radius(query[..., 0])
        r_k = self._radius(key[..., 0])
        phi = da * w_a
        return np.stack(
            np.broadcast_arrays(
                (key[..., 0] - query[..., 0]) * w_r,
                phi * 0.5 * (r_q + r_k),
                (key[..., 2] - query[..., 2]) * w_z,
                r_k * np.cos(phi) - r_q,
                r_k * np.sin(phi),
            ),
            axis=-1,
        )

    def centers(self, index: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Polar (r, θ, z) and Cartesian (x, y, z) centers of voxels addressed by ``index``."""
        index = np.asarray(index)
        r = self._radius(index[..., 0])
        theta = normalize_angles(self.spec.theta_range[0] + (index[..., 1] + 0.5) * self.spec.widths[1])
        z = self.spec.z_range[0] + (index[..., 2] + 0.5) * self.spec.widths[2]
        return np.stack([r, theta, z], axis=-1), np.stack([r * np.cos(theta), r * np.sin(theta), z], axis=-1)


@dataclass(frozen=True)
class CartesianOffsets:
    spec: CartesianGridSpec

    @property
    def wrap_axes(self) -> tuple[bool, bool, bool]:
        return False, False, False

    def _xyz(self, index: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        lows = [lo for lo, _ in self.spec.ranges]
        return tuple(lo + (index[..., axis] + 0.5) * w for axis, (lo, w) in enumerate(zip(lows, self.spec.widths)))

    def offsets(self, query: np.ndarray, key: np.ndarray) -> np.ndarray:
        xq, yq, zq = self._xyz(np.asarray(query))
        xk, yk, zk = self._xyz(np.asarray(key))
        r_q, r_k = np.hypot(xq, yq), np.hypot(xk, yk)
        dtheta = normalize_angles(np.arctan2(yk, xk) - np.arctan2(yq, xq))
        return np.stack(
            np.broadcast_arrays(r_k - r_q, dtheta * 0.5 * (r_q + r_k), zk - zq, xk - xq, yk - yq),
            axis=-1,
        )

    def centers(self, index: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        x, y, z = self._xyz(np.asarray(index))
        return np.stack([np.hypot(x, y), np.arctan2(y, x), z], axis=-1), np.stack([x, y, z], axis=-1)


OffsetGeometry = Union[PolarOffsets, CartesianOffsets]


def offset_geometry(spec) -> OffsetGeometry:
    if isinstance(spec, PolarGridSpec):
        return PolarOffsets(spec)
    return CartesianOffsets(spec)

"""Trilinear resampling of a working volume onto the Cartesian output grid.

Continuous indices place bin centers on integers: ``u = (v − v_min) / width − 0.5``.
The azimuth axis wraps. Radial and height queries inside the grid extent but beyond the
outermost centers clamp to the edge bin; queries outside the extent sample the zero feature.
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from pyhub.polarocc.core.exceptions import ConfigError
from pyhub.polarocc.geometry import CartesianGridSpec, GridSpec, PolarGridSpec, PolarPoint, cart_to_polar_arrays
from pyhub.polarocc.tensor import Array
from pyhub.polarocc.voxelize import FeatureVolume

logger = logging.getLogger(__name__)

POLAR_WRAP = (False, True, False)
NO_WRAP = (False, False, False)


@dataclass(frozen=True)
class SamplingPlan:
    """Corner voxels ``[Q, 8]`` (flat ids into the source grid) and their blend weights."""

    source_shape: tuple[int, int, int]
    corners: np.ndarray
    weights: np.ndarray
    valid: np.ndarray

    @property
    def n_queries(self) -> int:
        return self.corners.shape[0]


def _axis_corners(u: np.ndarray, n: int, wrap: bool) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(lower index, upper index, fraction) along one axis."""
    if wrap:
        base = np.floor(u)
        frac = u - base
        lower = np.mod(base.astype(np.int64), n)
        return lower, np.mod(lower + 1, n), frac
    u = np.clip(u, 0.0, n - 1.0)
    lower = np.clip(np.floor(u).astype(np.int64), 0, max(n - 2, 0))
    upper = np.minimum(lower + 1, n - 1)
    return lower, upper, u - lower


def build_plan(
    u: np.ndarray, shape: Sequence[int], wrap: Sequence[bool] = POLAR_WRAP, valid: Optional[np.ndarray] = None
) -> SamplingPlan:
    """Plan for continuous indices ``u`` [Q, 3] on a grid of ``shape``."""
    u = np.asarray(u, dtype=np.float64).reshape(-1, 3)
    shape = tuple(int(n) for n in shape)
    valid = np.ones(len(u), dtype=bool) if valid is None else np.asarray(valid, dtype=bool).reshape(-1)
    axes = [_axis_corners(u[:, axis], shape[axis], wrap[axis]) for axis in range(3)]
    corners = np.empty((len(u), 8), dtype=np.int64)
    weights = np.empty((len(u), 8))
    for k in range(8):
        bits = ((k >> 2) & 1, (k >> 1) & 1, k & 1)
        index = []
        w = np.ones(len(u))
        for (lower, upper, frac), bit in zip(axes, bits):
            index.append(upper if bit else lower)
            w = w * (frac if bit else 1.0 - frac)
        corners[:, k] = np.ravel_multi_index(tuple(index), shape)
        weights[:, k] = w
    weights[~valid] = 0.0
    return SamplingPlan(shape, corners, weights, valid)


def polar_continuous_index(spec: PolarGridSpec, r, theta, z) -> tuple[np.ndarray, np.ndarray]:
    """([Q, 3] continuous index, [Q] inside-extent flag) for polar queries."""
    r = np.asarray(r, dtype=np.float64).reshape(-1)
    theta = np.asarray(theta, dtype=np.float64).reshape(-1)
    z = np.asarray(z, dtype=np.float64).reshape(-1)
    w_r, w_a, w_z = spec.widths
    if spec.r_edges is None:
        u_r = (r - spec.r_range[0]) / w_r - 0.5
    else:
        centers = spec.r_centers()
        u_r = np.interp(r, centers, np.arange(len(centers), dtype=np.float64))
    u_a = (theta - spec.theta_range[0]) / w_a - 0.5
    u_z = (z - spec.z_range[0]) / w_z - 0.5
    valid = (r >= spec.r_range[0]) & (r <= spec.r_range[1]) & (z >= spec.z_range[0]) & (z <= spec.z_range[1])
    return np.stack([u_r, u_a, u_z], axis=-1), valid


def cartesian_continuous_index(spec: CartesianGridSpec, x, y, z) -> tuple[np.ndarray, np.ndarray]:
    coords = [np.asarray(v, dtype=np.float64).reshape(-1) for v in (x, y, z)]
    u = np.stack([(v - lo) / w - 0.5 for v, (lo, _), w in zip(coords, spec.ranges, spec.widths)], axis=-1)
    valid = np.ones(len(coords[0]), dtype=bool)
    for v, (lo, hi) in zip(coords, spec.ranges):
        valid &= (v >= lo) & (v <= hi)
    return u, valid


def sample(data: Array, plan: SamplingPlan) -> Array:
    """[R, A, Z, C] -> [Q, C]"""
    if tuple(data.shape[:3]) != plan.source_shape:
        raise ConfigError(f"sampling plan built for {plan.source_shape}, volume is {data.shape[:3]}")
    flat = data.reshape(-1, data.shape[3])
    return np.einsum("qk,qkc->qc", plan.weights, flat[plan.corners])


def sample_backward(plan: SamplingPlan, grad: Array) -> Array:
    """Scatter ``grad`` [Q, C] back onto the source grid."""
    c = grad.shape[-1]
    out = np.zeros((int(np.prod(plan.source_shape)), c))
    np.add.at(out, plan.corners.reshape(-1), (plan.weights[:, :, None] * grad[:, None, :]).reshape(-1, c))
    return out.reshape(plan.source_shape + (c,))


def trilinear_sample(volume: FeatureVolume, q: PolarPoint) -> Array:
    if not isinstance(volume.spec, PolarGridSpec):
        raise ConfigError("trilinear_sample needs a volume on a polar grid")
    u, valid = polar_continuous_index(volume.spec, q.r, q.theta, q.z)
    return sample(volume.data, build_plan(u, volume.spec.bins, POLAR_WRAP, valid))[0]


@lru_cache(maxsize=32)
def resampling_plan(source: GridSpec, target: CartesianGridSpec) -> SamplingPlan:
    """Plan sampling ``source`` at every voxel center of ``target`` (row-major over the target)."""
    centers = target.center_grid().reshape(-1, 3)
    x, y, z = centers[:, 0], centers[:, 1], centers[:, 2]
    if isinstance(source, PolarGridSpec):
        r, theta = cart_to_polar_arrays(x, y)
        u, valid = polar_continuous_index(source, r, theta, z)
        plan = build_plan(u, source.bins, POLAR_WRAP, valid)
    else:
        u, valid = cartesian_continuous_index(source, x, y, z)
        plan = build_plan(u, source.bins, NO_WRAP, valid)
    logger.debug("resampling plan %s -> %s: %d of %d targets in support", source.bins, target.bins, valid.sum(), len(u))
    return plan


def polar_to_cartesian_grid(volume: FeatureVolume, out_spec: CartesianGridSpec) -> FeatureVolume:
    plan = resampling_plan(volume.spec, out_spec)
    data = sample(volume.data, plan).reshape(tuple(out_spec.bins) + (volume.channels,))
    return FeatureVolume(spec=out_spec, data=data, mask=plan.valid.reshape(out_spec.bins))


def polar_to_cartesian_backward(source: GridSpec, out_spec: CartesianGridSpec, grad: Array) -> Array:
    """Gradient w.r.t. the source volume for upstream ``grad`` [X, Y, Z, C]."""
    plan = resampling_plan(source, out_spec)
    return sample_backward(plan, grad.reshape(-1, grad.shape[-1]))

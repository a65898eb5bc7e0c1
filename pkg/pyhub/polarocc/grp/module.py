"""Global representation propagation.

1. local condense: every S×S×S window is reduced to one feature by cross attention from its
   max-norm voxel (the query) to all voxels of the window;
2. global decomposed attention: self-attention along radial, then azimuth, then height strips
   of the condensed grid, each with a residual;
3. reverse propagation: every full-resolution voxel attends to the condensed features of its
   own window and the six face-adjacent windows, added residually.

Extents not divisible by S are zero-padded symmetrically and cropped at the end.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from pyhub.polarocc.core.exceptions import ConfigError, DimensionError
from pyhub.polarocc.tensor import Array
from pyhub.polarocc.voxelize import FeatureVolume

from .attention import AttentionCache, AttentionWeights, attention_backward, attention_forward
from .positions import OffsetGeometry, offset_geometry

logger = logging.getLogger(__name__)

AXES = ("r", "a", "z")

# own window first, then -/+ along r, a, z
NEIGHBOR_STEPS = np.array(
    [(0, 0, 0), (-1, 0, 0), (1, 0, 0), (0, -1, 0), (0, 1, 0), (0, 0, -1), (0, 0, 1)],
    dtype=np.int64,
)


@dataclass
class GrpParams:
    local: AttentionWeights
    axial: dict[str, AttentionWeights]
    reverse: AttentionWeights
    window: int = 2
    literal_eq: bool = False

    def __post_init__(self):
        if self.window < 1:
            raise ConfigError(f"grp.window_s must be >= 1, got {self.window}")
        if sorted(self.axial) != sorted(AXES):
            raise ConfigError(f"grp axial weights need keys {AXES}, got {sorted(self.axial)}")
        channels = {w.channels for w in self.modules().values()}
        if len(channels) != 1:
            raise ConfigError(f"grp projections disagree on channel count: {sorted(channels)}")

    @property
    def channels(self) -> int:
        return self.local.channels

    def modules(self) -> dict[str, AttentionWeights]:
        return {
            "local": self.local,
            "axial.r": self.axial["r"],
            "axial.a": self.axial["a"],
            "axial.z": self.axial["z"],
            "reverse": self.reverse,
        }

    @classmethod
    def zeros(cls, channels: int, window: int = 2, literal_eq: bool = False) -> "GrpParams":
        return cls(
            local=AttentionWeights.zeros(channels),
            axial={axis: AttentionWeights.zeros(channels) for axis in AXES},
            reverse=AttentionWeights.zeros(channels),
            window=window,
            literal_eq=literal_eq,
        )


@dataclass
class CondensedVolume:
    """[R/S, A/S, Z/S, C] window features and the fine index of each window's representative."""

    data: Array
    rep_index: np.ndarray
    rep_polar: Optional[np.ndarray] = None
    rep_cart: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.rep_index.shape != self.data.shape[:3] + (3,):
            raise DimensionError("CondensedVolume", self.data.shape, self.rep_index.shape)

    @property
    def shape(self) -> tuple:
        return self.data.shape


@dataclass
class GrpCache:
    pads: list[tuple[int, int]]
    padded: Array
    local: AttentionCache
    rep_local: np.ndarray
    condensed: CondensedVolume
    axial: list[tuple[str, AttentionCache]] = field(default_factory=list)
    mixed: Optional[CondensedVolume] = None
    reverse: Optional[AttentionCache] = None
    neighbor_ids: Optional[np.ndarray] = None


#
# windows
#


def window_pads(extents, window: int) -> list[tuple[int, int]]:
    pads = []
    for n in extents:
        total = (-n) % window
        pads.append((total // 2, total - total // 2))
    return pads


def _pad(x: Array, pads) -> Array:
    if not any(before or after for before, after in pads):
        return x
    return np.pad(x, list(pads) + [(0, 0)])


def _crop(x: Array, pads) -> Array:
    slices = tuple(slice(before, x.shape[axis] - after) for axis, (before, after) in enumerate(pads))
    return x[slices]


def _to_windows(x: Array, window: int) -> Array:
    """[Rp, Ap, Zp, C] -> [Nw, S³, C] with windows and in-window voxels in row-major order."""
    Rp, Ap, Zp, C = x.shape
    S = window
    blocks = x.reshape(Rp // S, S, Ap // S, S, Zp // S, S, C).transpose(0, 2, 4, 1, 3, 5, 6)
    return blocks.reshape(-1, S**3, C)


def _from_windows(w: Array, grid: tuple[int, int, int], window: int) -> Array:
    S = window
    nR, nA, nZ = grid
    C = w.shape[-1]
    blocks = w.reshape(nR, nA, nZ, S, S, S, C).transpose(0, 3, 1, 4, 2, 5, 6)
    return blocks.reshape(nR * S, nA * S, nZ * S, C)


def _window_fine_index(grid: tuple[int, int, int], window: int, pads) -> np.ndarray:
    """[Nw, S³, 3] fine indices (in unpadded coordinates) of every voxel of every window."""
    origins = np.indices(grid).reshape(3, -1).T * window
    local = np.indices((window,) * 3).reshape(3, -1).T
    before = np.array([b for b, _ in pads])
    return origins[:, None, :] + local[None, :, :] - before


#
# local condense
#


def _local_forward(
    xp: Array, params: GrpParams, geometry: OffsetGeometry, pads
) -> tuple[CondensedVolume, AttentionCache, np.ndarray]:
    S = params.window
    grid = tuple(n // S for n in xp.shape[:3])
    windows = _to_windows(xp, S)
    fine = _window_fine_index(grid, S, pads)
    # maxsel: 최대 L2 norm, 동점이면 가장 낮은 인덱스
    rep = np.argmax(np.sum(windows * windows, axis=-1), axis=1)
    rows = np.arange(windows.shape[0])
    q_index = fine[rows, rep]
    offsets = geometry.offsets(q_index[:, None, None, :], fine[:, None, :, :])
    queries = windows[rows, rep][:, None, :]
    out, cache = attention_forward(queries, windows, offsets, params.local, literal=params.literal_eq)
    rep_index = q_index.reshape(grid + (3,))
    rep_polar, rep_cart = geometry.centers(rep_index)
    condensed = CondensedVolume(
        data=out[:, 0, :].reshape(grid + (xp.shape[3],)),
        rep_index=rep_index,
        rep_polar=rep_polar,
        rep_cart=rep_cart,
    )
    return condensed, cache, rep


def _local_backward(
    grad: Array, cache: AttentionCache, rep: np.ndarray, params: GrpParams, padded_shape
) -> tuple[Array, dict]:
    S = params.window
    grid = tuple(n // S for n in padded_shape[:3])
    grad_q, grad_windows, grads = attention_backward(cache, params.local, grad.reshape(-1, 1, grad.shape[-1]))
    grad_windows = grad_windows.copy()
    grad_windows[np.arange(grad_windows.shape[0]), rep] += grad_q[:, 0, :]
    return _from_windows(grad_windows, grid, S), grads


def local_condense_attention(x: Array, params: GrpParams, geometry: OffsetGeometry) -> CondensedVolume:
    pads = window_pads(x.shape[:3], params.window)
    return _local_forward(_pad(x, pads), params, geometry, pads)[0]


#
# global decomposed attention
#


def _axial_forward(condensed: CondensedVolume, axis: int, weights: AttentionWeights, geometry, literal: bool):
    x = np.moveaxis(condensed.data, axis, 2)
    idx = np.moveaxis(condensed.rep_index, axis, 2)
    outer = x.shape[:2]
    n, c = x.shape[2], x.shape[3]
    strips = x.reshape(-1, n, c)
    strip_idx = idx.reshape(-1, n, 3)
    offsets = geometry.offsets(strip_idx[:, :, None, :], strip_idx[:, None, :, :])
    attended, cache = attention_forward(strips, strips, offsets, weights, literal=literal)
    out = np.moveaxis((strips + attended).reshape(outer + (n, c)), 2, axis)
    return CondensedVolume(out, condensed.rep_index, condensed.rep_polar, condensed.rep_cart), cache


def _axial_backward(grad: Array, axis: int, cache: AttentionCache, weights: AttentionWeights):
    g = np.moveaxis(grad, axis, 2)
    shape = g.shape
    g = g.reshape(-1, shape[2], shape[3])
    grad_q, grad_kv, grads = attention_backward(cache, weights, g)
    total = g + grad_q + grad_kv
    return np.moveaxis(total.reshape(shape), 2, axis), grads


def _global_forward(condensed: CondensedVolume, params: GrpParams, geometry) -> tuple[CondensedVolume, list]:
    caches = []
    h = condensed
    for axis, name in enumerate(AXES):
        h, cache = _axial_forward(h, axis, params.axial[name], geometry, params.literal_eq)
        caches.append((name, cache))
    return h, caches


def _global_backward(grad: Array, caches: list, params: GrpParams) -> tuple[Array, dict]:
    grads = {}
    for axis in reversed(range(len(AXES))):
        name, cache = caches[axis]
        grad, grads[f"axial.{name}"] = _axial_backward(grad, axis, cache, params.axial[name])
    return grad, grads


def global_decomposed_attention(
    condensed: CondensedVolume, params: GrpParams, geometry: OffsetGeometry
) -> CondensedVolume:
    return _global_forward(condensed, params, geometry)[0]


#
# reverse propagation
#


def neighbor_windows(grid: tuple[int, int, int], wrap_axes) -> tuple[np.ndarray, np.ndarray]:
    """Flat ids [Nw, 7] of each window's own and face-adjacent windows, and their validity.

    Wrapped axes use modular neighbours; a neighbour reached twice (short wrapped axes) is
    kept once. Neighbours outside clipped axes are invalid.
    """
    origin = np.indices(grid).reshape(3, -1).T
    cells = origin[:, None, :] + NEIGHBOR_STEPS[None, :, :]
    valid = np.ones(cells.shape[:2], dtype=bool)
    for axis, n in enumerate(grid):
        if wrap_axes[axis]:
            cells[..., axis] %= n
        else:
            valid &= (cells[..., axis] >= 0) & (cells[..., axis] < n)
            cells[..., axis] = np.clip(cells[..., axis], 0, n - 1)
    ids = np.ravel_multi_index(tuple(cells[..., axis] for axis in range(3)), grid)
    for k in range(1, ids.shape[1]):
        for j in range(k):
            valid[:, k] &= ~(valid[:, j] & (ids[:, j] == ids[:, k]))
    return ids, valid


def _reverse_forward(xp: Array, condensed: CondensedVolume, params: GrpParams, geometry, pads):
    S = params.window
    grid = condensed.data.shape[:3]
    if tuple(n * S for n in grid) != xp.shape[:3]:
        raise ConfigError(f"condensed extents {grid} do not match full extents {xp.shape[:3]} with S={S}")
    queries = _to_windows(xp, S)
    fine = _window_fine_index(grid, S, pads)
    ids, valid = neighbor_windows(grid, geometry.wrap_axes)
    c = condensed.data.shape[3]
    keys = condensed.data.reshape(-1, c)[ids]
    key_index = condensed.rep_index.reshape(-1, 3)[ids]
    offsets = geometry.offsets(fine[:, :, None, :], key_index[:, None, :, :])
    mask = np.broadcast_to(valid[:, None, :], offsets.shape[:3])
    attended, cache = attention_forward(queries, keys, offsets, params.reverse, mask=mask, literal=params.literal_eq)
    return _from_windows(queries + attended, grid, S), cache, ids


def _reverse_backward(grad_full: Array, cache: AttentionCache, ids: np.ndarray, params: GrpParams, grid):
    S = params.window
    g = _to_windows(grad_full, S)
    grad_q, grad_kv, grads = attention_backward(cache, params.reverse, g)
    c = grad_full.shape[3]
    grad_condensed = np.zeros((int(np.prod(grid)), c))
    np.add.at(grad_condensed, ids.reshape(-1), grad_kv.reshape(-1, c))
    return _from_windows(g + grad_q, grid, S), grad_condensed.reshape(tuple(grid) + (c,)), grads


def reverse_propagate(x: Array, condensed: CondensedVolume, params: GrpParams, geometry: OffsetGeometry) -> Array:
    pads = window_pads(x.shape[:3], params.window)
    xp = _pad(x, pads)
    if condensed.data.shape[:3] != tuple(n // params.window for n in xp.shape[:3]):
        raise ConfigError(f"condensed extents {condensed.data.shape[:3]} do not match {x.shape[:3]} / {params.window}")
    return _crop(_reverse_forward(xp, condensed, params, geometry, pads)[0], pads)


#
# full module
#


def grp_forward_cached(x: Array, params: GrpParams, geometry: OffsetGeometry) -> tuple[Array, GrpCache]:
    if x.ndim != 4 or x.shape[3] != params.channels:
        raise ConfigError(f"grp expects [R, A, Z, {params.channels}] input, got {x.shape}")
    pads = window_pads(x.shape[:3], params.window)
    xp = _pad(x, pads)
    condensed, local_cache, rep = _local_forward(xp, params, geometry, pads)
    mixed, axial_caches = _global_forward(condensed, params, geometry)
    out, reverse_cache, ids = _reverse_forward(xp, mixed, params, geometry, pads)
    cache = GrpCache(
        pads=pads,
        padded=xp,
        local=local_cache,
        rep_local=rep,
        condensed=condensed,
        axial=axial_caches,
        mixed=mixed,
        reverse=reverse_cache,
        neighbor_ids=ids,
    )
    return _crop(out, pads), cache


def grp_forward_array(x: Array, params: GrpParams, geometry: OffsetGeometry) -> Array:
    return grp_forward_cached(x, params, geometry)[0]


def grp_backward(
    x: Array, params: GrpParams, geometry: OffsetGeometry, upstream_grad: Array, cache: Optional[GrpCache] = None
) -> tuple[Array, dict[str, dict[str, Array]]]:
    """Returns (grad_x, {"local" | "axial.r" | "axial.a" | "axial.z" | "reverse": {weight: grad}})."""
    if cache is None:
        _, cache = grp_forward_cached(x, params, geometry)
    grid = cache.condensed.data.shape[:3]
    grad_padded = _pad(upstream_grad, cache.pads)
    grad_xp, grad_mixed, reverse_grads = _reverse_backward(grad_padded, cache.reverse, cache.neighbor_ids, params, grid)
    grad_condensed, grads = _global_backward(grad_mixed, cache.axial, params)
    grads["reverse"] = reverse_grads
    grad_local_in, grads["local"] = _local_backward(
        grad_condensed, cache.local, cache.rep_local, params, cache.padded.shape
    )
    return _crop(grad_xp + grad_local_in, cache.pads), grads


def grp_forward(volume: FeatureVolume, params: GrpParams) -> FeatureVolume:
    return volume.with_data(grp_forward_array(volume.data, params, offset_geometry(volume.spec)))

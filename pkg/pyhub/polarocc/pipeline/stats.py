"""Model size and compute per module, and point density by range band."""

import logging
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from pyhub.polarocc.core.choices import Topology
from pyhub.polarocc.geometry import GridSpec, PolarGridSpec, cartesian_twin
from pyhub.polarocc.grp import OFFSET_DIM
from pyhub.polarocc.pdconv import PdStackConfig, block_stats, schedule_shapes
from pyhub.polarocc.voxelize import N_CHANNELS, HistogramRow, PointCloud, density_ratio, occupancy_histogram

from .config import ModelConfig
from .params import param_layout

logger = logging.getLogger(__name__)


@dataclass
class ModuleStats:
    module: str
    params: int
    macs: int


def _attention_macs(n_query: int, n_key: int, channels: int) -> int:
    # Q, K, V 투영 + 점수 + 가중합 + 위치 항
    projections = (n_query + 2 * n_key) * channels * channels
    return projections + 2 * n_query * n_key * channels + n_query * n_key * OFFSET_DIM


def _grp_macs(extents: tuple[int, int, int], channels: int, window: int) -> int:
    padded = [n + (-n) % window for n in extents]
    grid = [n // window for n in padded]
    n_windows = int(np.prod(grid))
    n_fine = int(np.prod(padded))
    macs = n_windows * _attention_macs(1, window**3, channels)
    for axis in range(3):
        length = grid[axis]
        n_strips = n_windows // length
        macs += n_strips * _attention_macs(length, length, channels)
    macs += n_fine * _attention_macs(1, 7, channels)
    return macs


def model_stats(cfg: ModelConfig) -> list[ModuleStats]:
    layout = param_layout(cfg)
    c = cfg.channels
    work = tuple(cfg.working_spec().bins)
    n_work = int(np.prod(work))

    def count(prefix: str) -> int:
        return sum(int(np.prod(slot.shape)) for name, slot in layout.items() if name.startswith(prefix))

    rows = [ModuleStats("stem", count("stem."), n_work * N_CHANNELS * c)]
    if cfg.fused():
        hidden = cfg.fusion.hidden
        rows.append(ModuleStats("fusion", count("fusion."), n_work * (27 * 2 * c * hidden + hidden)))

    stack = cfg.pd_stack()
    schedule = cfg.schedule()
    extents = [work] + schedule_shapes(work, schedule)
    for i in range(len(schedule)):
        block = block_stats(stack, c, extents[i])
        rows.append(ModuleStats(f"backbone.{i}", count(f"backbone.{i}."), block.macs))

    final = tuple(cfg.final_spec().bins)
    if cfg.grp.enable:
        rows.append(ModuleStats("grp", count("grp."), _grp_macs(final, c, cfg.grp.window_s)))

    n_out = int(np.prod(cfg.output_spec().bins))
    rows.append(ModuleStats("sampler", 0, n_out * 8 * c))
    rows.append(ModuleStats("head", count("head."), n_out * c * cfg.n_classes))
    logger.debug("model stats: %d params, %d macs", sum(r.params for r in rows), sum(r.macs for r in rows))
    return rows


def stats_to_dict(rows: list[ModuleStats]) -> dict:
    return {
        "modules": [asdict(row) for row in rows],
        "total_params": sum(row.params for row in rows),
        "total_macs": sum(row.macs for row in rows),
    }


def pd_param_identity(channels: int) -> tuple[int, int]:
    """(decomposed r+a+z kernel parameters, full 3×3×3 kernel parameters); both are 27·C²."""
    extents = (1, 1, 1)
    decomposed = block_stats(PdStackConfig(topology=Topology.SERIAL), channels, extents).params
    full = block_stats(PdStackConfig(topology=Topology.NAIVE), channels, extents).params
    return decomposed, full


def pooled_histogram(clouds: Sequence[PointCloud], spec: GridSpec, n_bands: int) -> list[HistogramRow]:
    """Per-band occupied voxels and points summed over ``clouds``."""
    pooled: list[HistogramRow] = []
    for cloud in clouds:
        rows = occupancy_histogram(cloud, spec, n_bands)
        if not pooled:
            pooled = rows
            continue
        for total, row in zip(pooled, rows):
            total.occupied_voxels += row.occupied_voxels
            total.points += row.points
    for row in pooled:
        row.points_per_occupied_voxel = row.points / row.occupied_voxels if row.occupied_voxels else 0.0
    return pooled


def density_study(clouds: Sequence[PointCloud], polar: PolarGridSpec, n_bands: int) -> dict:
    """Points per occupied voxel by range band on the polar grid and its equal-count Cartesian twin."""
    polar_rows = pooled_histogram(clouds, polar, n_bands)
    cartesian_rows = pooled_histogram(clouds, cartesian_twin(polar), n_bands)
    return {
        "polar": [asdict(row) for row in polar_rows],
        "cartesian": [asdict(row) for row in cartesian_rows],
        "density_ratio": {"polar": density_ratio(polar_rows), "cartesian": density_ratio(cartesian_rows)},
    }

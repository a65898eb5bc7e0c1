"""Seeded synthetic scenes turned into model inputs and Cartesian targets."""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Sequence, TypeVar, Union

import numpy as np
from django.conf import settings

from pyhub.polarocc.core.choices import CloudFormat
from pyhub.polarocc.core.exceptions import DataError
from pyhub.polarocc.core.json_utils import json_dumps, json_loads_path
from pyhub.polarocc.head import HeadParams, SemanticGrid, classify, load_semantic, save_semantic
from pyhub.polarocc.metrics import ConfusionTable, MetricReport, evaluate
from pyhub.polarocc.synth import (
    SceneSpec,
    generate_scene,
    rasterize_truth,
    simulate_lidar,
    synthesize_camera_volume,
)
from pyhub.polarocc.tensor import read_array, write_array
from pyhub.polarocc.voxelize import FeatureVolume, PointCloud, load_cloud, save_cloud

from .config import ModelConfig
from .model import ModelInputs, predict_inputs, prepare_inputs
from .params import ParamStore

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


@dataclass
class Sample:
    seed: int
    scene: SceneSpec
    cloud: PointCloud
    truth: SemanticGrid
    camera: Optional[FeatureVolume]
    inputs: ModelInputs


def worker_count(threads: Optional[int] = None) -> int:
    return max(1, int(threads if threads is not None else settings.POLAROCC_THREADS))


def scene_map(func: Callable[[T], R], items: Sequence[T], threads: Optional[int] = None) -> list[R]:
    """``func`` over ``items`` in order; scenes are independent, so results do not depend on ``threads``."""
    n = worker_count(threads)
    if n == 1 or len(items) < 2:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=n, thread_name_prefix="polarocc-scene") as pool:
        return list(pool.map(func, items))


def build_sample(cfg: ModelConfig, seed: int, scene: Optional[SceneSpec] = None) -> Sample:
    out_spec = cfg.output_spec()
    scene = scene or generate_scene(seed, out_spec)
    cloud = simulate_lidar(scene, cfg.lidar.n_beams, cfg.lidar.points_per_beam, seed)
    camera = synthesize_camera_volume(scene, cfg.working_spec(), cfg.channels, seed) if cfg.fused() else None
    truth = rasterize_truth(scene, out_spec)
    if truth.n_classes != cfg.n_classes:
        truth = SemanticGrid(spec=out_spec, labels=truth.labels, n_classes=cfg.n_classes)
    return Sample(seed, scene, cloud, truth, camera, prepare_inputs(cfg, cloud, camera))


def split_seeds(cfg: ModelConfig) -> tuple[list[int], list[int]]:
    """Train seeds ``seed .. seed+n_train−1``, validation seeds right after them."""
    n_train, n_val = cfg.dataset.train_scenes, cfg.dataset.val_scenes
    train = [cfg.seed + i for i in range(n_train)]
    val = [cfg.seed + n_train + i for i in range(n_val)]
    return train, val


def build_dataset(cfg: ModelConfig, seeds: Sequence[int], threads: Optional[int] = None) -> list[Sample]:
    samples = scene_map(lambda seed: build_sample(cfg, seed), list(seeds), threads)
    logger.debug("built %d samples", len(samples))
    return samples


def predict(cfg: ModelConfig, params: ParamStore, sample: Sample) -> SemanticGrid:
    return predict_inputs(cfg, params, sample.inputs)[1]


def oracle_predict(sample: Sample) -> SemanticGrid:
    """Truth one-hot injected as the Cartesian feature volume, read out by an identity head."""
    k = sample.truth.n_classes
    one_hot = np.eye(k)[sample.truth.labels]
    volume = FeatureVolume(spec=sample.truth.spec, data=one_hot, mask=sample.truth.occupied)
    return classify(volume, HeadParams(np.eye(k), np.zeros(k)))[1]


def evaluate_samples(
    cfg: ModelConfig,
    params: Optional[ParamStore],
    samples: Sequence[Sample],
    n_bands: int = 0,
    threads: Optional[int] = None,
) -> tuple[ConfusionTable, MetricReport]:
    """Scene-parallel prediction and metrics; ``params=None`` evaluates the truth oracle."""
    if not samples:
        raise DataError("evaluation needs at least one scene")
    if params is None:
        preds = scene_map(oracle_predict, list(samples), threads)
    else:
        preds = scene_map(lambda s: predict(cfg, params, s), list(samples), threads)
    return evaluate(preds, [s.truth for s in samples], n_bands)


#
# dataset directories (written by ``synth``, read by ``run``)
#


def sample_paths(directory: Path, index: int, fmt: str = CloudFormat.CSV) -> dict[str, Path]:
    suffix = ".csv" if fmt == CloudFormat.CSV else ".bin"
    return {
        "scene": directory / f"scene_{index:04d}.json",
        "cloud": directory / f"cloud_{index:04d}{suffix}",
        "truth": directory / f"truth_{index:04d}.pvosem",
        "camera": directory / f"camera_{index:04d}.pvoarr",
    }


def write_sample_files(
    cfg: ModelConfig, seed: int, directory: Union[str, Path], index: int, fmt: str = CloudFormat.CSV
) -> list[Path]:
    """Scene JSON, point cloud, truth grid and camera volume of one seeded scene."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = sample_paths(directory, index, fmt)
    scene = generate_scene(seed, cfg.output_spec())
    cloud = simulate_lidar(scene, cfg.lidar.n_beams, cfg.lidar.points_per_beam, seed)
    camera = synthesize_camera_volume(scene, cfg.working_spec(), cfg.channels, seed)
    paths["scene"].write_text(json_dumps(scene.to_dict()), encoding="utf-8")
    save_cloud(paths["cloud"], cloud, fmt)
    save_semantic(paths["truth"], rasterize_truth(scene, cfg.output_spec()))
    write_array(paths["camera"], camera.data)
    return list(paths.values())


def _cloud_path(directory: Path, index: int) -> Path:
    for fmt in (CloudFormat.CSV, CloudFormat.BIN):
        path = sample_paths(directory, index, fmt)["cloud"]
        if path.is_file():
            return path
    raise FileNotFoundError(f"no point cloud for scene {index} in {directory}")


def load_sample(cfg: ModelConfig, directory: Union[str, Path], index: int) -> Sample:
    directory = Path(directory)
    paths = sample_paths(directory, index)
    scene = SceneSpec.from_dict(json_loads_path(paths["scene"]))
    cloud = load_cloud(_cloud_path(directory, index))
    truth = load_semantic(paths["truth"], cfg.output_spec())
    if truth.n_classes != cfg.n_classes:
        raise DataError(f"{paths['truth']}: {truth.n_classes} classes, the config expects {cfg.n_classes}")
    camera = None
    if cfg.fused():
        camera = FeatureVolume(spec=cfg.working_spec(), data=_camera_array(cfg, paths["camera"]))
    return Sample(scene.seed, scene, cloud, truth, camera, prepare_inputs(cfg, cloud, camera))


def _camera_array(cfg: ModelConfig, path: Path) -> np.ndarray:
    if not path.is_file():
        raise FileNotFoundError(f"camera volume not found: {path}")
    data = read_array(path)
    expected = tuple(cfg.working_spec().bins) + (cfg.channels,)
    if data.shape != expected:
        raise DataError(f"{path}: camera volume has shape {data.shape}, the config expects {expected}")
    return data


def load_samples(cfg: ModelConfig, directory: Union[str, Path]) -> list[Sample]:
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"data directory not found: {directory}")
    indices = sorted(int(p.stem.split("_")[1]) for p in directory.glob("scene_*.json"))
    return [load_sample(cfg, directory, i) for i in indices]

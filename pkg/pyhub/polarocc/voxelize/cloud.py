import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

from pyhub.polarocc.core.choices import CloudFormat
from pyhub.polarocc.core.exceptions import DataError
from pyhub.polarocc.geometry import cart_to_polar_arrays
from pyhub.polarocc.tensor import read_array, write_array

logger = logging.getLogger(__name__)

CSV_HEADER = ["x", "y", "z", "i"]


@dataclass
class PointCloud:
    """N points stored as rows of (r, θ, x, y, z, i)."""

    points: np.ndarray

    def __post_init__(self):
        points = np.asarray(self.points, dtype=np.float64)
        if points.size == 0:
            points = points.reshape(0, 6)
        if points.ndim != 2 or points.shape[1] != 6:
            raise DataError(f"point cloud must be N×6 (r, θ, x, y, z, i), got {points.shape}")
        self.points = points

    @classmethod
    def from_xyzi(cls, xyzi: np.ndarray) -> "PointCloud":
        xyzi = np.asarray(xyzi, dtype=np.float64)
        if xyzi.size == 0:
            return cls.empty()
        if xyzi.ndim != 2 or xyzi.shape[1] != 4:
            raise DataError(f"expected N×4 (x, y, z, i) rows, got {xyzi.shape}")
        if not np.isfinite(xyzi).all():
            raise DataError("point cloud contains non-finite values")
        r, theta = cart_to_polar_arrays(xyzi[:, 0], xyzi[:, 1])
        return cls(np.column_stack([r, theta, xyzi]))

    @classmethod
    def empty(cls) -> "PointCloud":
        return cls(np.zeros((0, 6)))

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def r(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def theta(self) -> np.ndarray:
        return self.points[:, 1]

    @property
    def x(self) -> np.ndarray:
        return self.points[:, 2]

    @property
    def y(self) -> np.ndarray:
        return self.points[:, 3]

    @property
    def z(self) -> np.ndarray:
        return self.points[:, 4]

    @property
    def intensity(self) -> np.ndarray:
        return self.points[:, 5]

    def xyzi(self) -> np.ndarray:
        return self.points[:, 2:6].copy()


def _format_for(path: Path, fmt) -> str:
    if fmt is not None:
        return CloudFormat(fmt)
    return CloudFormat.CSV if path.suffix.lower() == ".csv" else CloudFormat.BIN


def save_cloud(path: Union[str, Path], cloud: PointCloud, fmt=None) -> Path:
    path = Path(path)
    if _format_for(path, fmt) == CloudFormat.CSV:
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(CSV_HEADER)
            for row in cloud.xyzi():
                writer.writerow([repr(float(v)) for v in row])
    else:
        if len(cloud) == 0:
            raise DataError("an empty cloud cannot be stored in the binary array format; use csv")
        write_array(path, cloud.xyzi())
    return path


def load_cloud(path: Union[str, Path], fmt=None) -> PointCloud:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"point cloud file not found: {path}")

    if _format_for(path, fmt) == CloudFormat.BIN:
        return PointCloud.from_xyzi(read_array(path))

    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != CSV_HEADER:
            raise DataError(f"{path}: expected CSV header {','.join(CSV_HEADER)}, got {header}")
        rows = []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                rows.append([float(v) for v in row])
            except ValueError as e:
                raise DataError(f"{path}:{line_no}: {e}") from e
            if len(rows[-1]) != 4:
                raise DataError(f"{path}:{line_no}: expected 4 values, got {len(rows[-1])}")
    logger.debug("loaded %d points from %s", len(rows), path)
    return PointCloud.from_xyzi(np.array(rows, dtype=np.float64).reshape(-1, 4))

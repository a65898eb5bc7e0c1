"""Semantic occupancy grids and the PVOSEM1 label container.

PVOSEM1 layout (little endian)::

    b"PVOSEM1" | u32 X | u32 Y | u32 Z | u32 n_classes | u16 labels[X·Y·Z] (row-major)
"""

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

from pyhub.polarocc.core.exceptions import DataError
from pyhub.polarocc.geometry import CartesianGridSpec

SEMANTIC_MAGIC = b"PVOSEM1"
FREE_LABEL = 0

_HEADER = struct.Struct("<IIII")


@dataclass
class SemanticGrid:
    spec: CartesianGridSpec
    labels: np.ndarray
    n_classes: int

    def __post_init__(self):
        self.labels = np.asarray(self.labels)
        if not np.issubdtype(self.labels.dtype, np.integer):
            raise DataError(f"labels must be integers, got {self.labels.dtype}")
        self.labels = self.labels.astype(np.int64, copy=False)
        if self.labels.shape != tuple(self.spec.bins):
            raise DataError(f"labels shape {self.labels.shape} does not match grid {self.spec.bins}")
        if self.n_classes < 1 or self.n_classes > 65536:
            raise DataError(f"n_classes must be in [1, 65536], got {self.n_classes}")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.n_classes):
            raise DataError(
                f"labels must lie in [0, {self.n_classes}), got [{self.labels.min()}, {self.labels.max()}]"
            )

    @property
    def occupied(self) -> np.ndarray:
        return self.labels != FREE_LABEL

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels.reshape(-1), minlength=self.n_classes)

    def summary(self) -> dict:
        return {
            "format": SEMANTIC_MAGIC.decode(),
            "grid": self.spec.to_dict(),
            "n_classes": self.n_classes,
            "class_counts": self.class_counts().tolist(),
            "n_occupied": int(self.occupied.sum()),
        }


def dumps_semantic(grid: SemanticGrid) -> bytes:
    return (
        SEMANTIC_MAGIC
        + _HEADER.pack(*grid.spec.bins, grid.n_classes)
        + grid.labels.astype("<u2").tobytes(order="C")
    )


def loads_semantic(buffer: bytes, spec: CartesianGridSpec) -> SemanticGrid:
    if buffer[: len(SEMANTIC_MAGIC)] != SEMANTIC_MAGIC:
        raise DataError("not a PVOSEM1 file")
    try:
        *extents, n_classes = _HEADER.unpack_from(buffer, len(SEMANTIC_MAGIC))
    except struct.error as e:
        raise DataError("truncated PVOSEM1 header") from e
    if tuple(extents) != tuple(spec.bins):
        raise DataError(f"PVOSEM1 extents {tuple(extents)} do not match grid {spec.bins}")
    start = len(SEMANTIC_MAGIC) + _HEADER.size
    count = int(np.prod(extents))
    if len(buffer) != start + 2 * count:
        raise DataError(f"PVOSEM1 payload holds {len(buffer) - start} bytes, expected {2 * count}")
    labels = np.frombuffer(buffer, dtype="<u2", count=count, offset=start).astype(np.int64).reshape(extents)
    return SemanticGrid(spec=spec, labels=labels, n_classes=n_classes)


def save_semantic(path: Union[str, Path], grid: SemanticGrid) -> None:
    Path(path).write_bytes(dumps_semantic(grid))


def load_semantic(path: Union[str, Path], spec: CartesianGridSpec) -> SemanticGrid:
    return loads_semantic(Path(path).read_bytes(), spec)

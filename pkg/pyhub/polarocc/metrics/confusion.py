"""Confusion accumulation and IoU scores.

Rows are ground truth, columns are predictions. Label 0 is free space.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from pyhub.polarocc.core.choices import SemanticClass
from pyhub.polarocc.core.exceptions import DataError
from pyhub.polarocc.head import FREE_LABEL, SemanticGrid

logger = logging.getLogger(__name__)


@dataclass
class ConfusionTable:
    n_classes: int
    counts: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.counts is None:
            self.counts = np.zeros((self.n_classes, self.n_classes), dtype=np.int64)
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.counts.shape != (self.n_classes, self.n_classes):
            raise DataError(f"confusion counts must be {self.n_classes}×{self.n_classes}, got {self.counts.shape}")

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def add(self, truth: np.ndarray, pred: np.ndarray) -> "ConfusionTable":
        """Add flat (truth, pred) label pairs in place."""
        k = self.n_classes
        pairs = truth.reshape(-1).astype(np.int64) * k + pred.reshape(-1).astype(np.int64)
        self.counts += np.bincount(pairs, minlength=k * k).reshape(k, k)
        return self

    def merge(self, other: "ConfusionTable") -> "ConfusionTable":
        if other.n_classes != self.n_classes:
            raise DataError(f"cannot merge tables with {self.n_classes} and {other.n_classes} classes")
        return ConfusionTable(self.n_classes, self.counts + other.counts)


def _check_pair(pred: SemanticGrid, truth: SemanticGrid, n_classes: int) -> None:
    if pred.spec != truth.spec:
        raise DataError(f"prediction grid {pred.spec} does not match truth grid {truth.spec}")
    if pred.n_classes != truth.n_classes or truth.n_classes != n_classes:
        raise DataError(f"class counts differ: pred {pred.n_classes}, truth {truth.n_classes}, table {n_classes}")


def accumulate(
    pred: SemanticGrid, truth: SemanticGrid, table: Optional[ConfusionTable] = None, mask: Optional[np.ndarray] = None
) -> ConfusionTable:
    """Returns a new table holding ``table`` plus the (truth, pred) pairs of this scene."""
    table = ConfusionTable(truth.n_classes) if table is None else ConfusionTable(table.n_classes, table.counts.copy())
    _check_pair(pred, truth, table.n_classes)
    if mask is None:
        return table.add(truth.labels, pred.labels)
    return table.add(truth.labels[mask], pred.labels[mask])


def geometric_iou(table: ConfusionTable) -> float:
    """Occupied-vs-free IoU; 1.0 when neither side has an occupied voxel."""
    occupied_truth = table.counts[FREE_LABEL + 1 :, :].sum()
    occupied_pred = table.counts[:, FREE_LABEL + 1 :].sum()
    tp = table.counts[FREE_LABEL + 1 :, FREE_LABEL + 1 :].sum()
    union = occupied_truth + occupied_pred - tp
    if union == 0:
        return 1.0
    return float(tp / union)


def class_ious(table: ConfusionTable) -> np.ndarray:
    """IoU per class; NaN for classes absent from both truth and prediction."""
    diag = np.diag(table.counts).astype(np.float64)
    union = table.counts.sum(axis=0) + table.counts.sum(axis=1) - diag
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(union > 0, diag / np.maximum(union, 1), np.nan)


def mean_iou(table: ConfusionTable, classes: Optional[Sequence[int]] = None) -> tuple[list[Optional[float]], float]:
    """(per non-free class IoU with None for absent classes, mean over present classes).

    ``classes`` restricts the mean; an empty selection scores nan.
    """
    ious = class_ious(table)
    per_class = [None if np.isnan(v) else float(v) for v in ious[FREE_LABEL + 1 :]]
    selected = range(FREE_LABEL + 1, table.n_classes) if classes is None else classes
    values = [ious[c] for c in selected if c != FREE_LABEL and not np.isnan(ious[c])]
    return per_class, float(np.mean(values)) if values else float("nan")


def stuff_miou(table: ConfusionTable, classes: Optional[Sequence[int]] = None) -> float:
    """mIoU over the scene-spanning classes."""
    stuff = [int(c) for c in SemanticClass.stuff()] if classes is None else list(classes)
    return mean_iou(table, [c for c in stuff if c < table.n_classes])[1]

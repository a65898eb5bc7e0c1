"""Metric reports: range bands and JSON/CSV emission."""

import csv
import io
import logging
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from pyhub.polarocc.core.choices import SemanticClass
from pyhub.polarocc.head import SemanticGrid
from pyhub.polarocc.voxelize import band_index

from .confusion import ConfusionTable, accumulate, geometric_iou, mean_iou, stuff_miou

logger = logging.getLogger(__name__)


@dataclass
class BandScore:
    band: int
    r_lo: float
    r_hi: float
    n_voxels: int
    miou: Optional[float]


@dataclass
class MetricReport:
    iou: float
    miou: Optional[float]
    stuff_miou: Optional[float]
    per_class: dict[str, Optional[float]]
    bands: list[BandScore] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "iou": self.iou,
            "miou": self.miou,
            "stuff_miou": self.stuff_miou,
            "per_class": self.per_class,
            "bands": [asdict(band) for band in self.bands],
        }


def class_names(n_classes: int) -> list[str]:
    names = [str(label) for label in SemanticClass.labels]  # SemanticClass.names() is shadowed by Django's ChoicesType.names
    return [names[c] if c < len(names) else f"class_{c}" for c in range(n_classes)]


def range_stratified_miou(
    preds: Sequence[SemanticGrid], truths: Sequence[SemanticGrid], n_bands: int
) -> list[BandScore]:
    """mIoU per equal-width BEV radius band; bands without voxels report ``None``."""
    spec = truths[0].spec
    bands, edges = band_index(spec, n_bands)
    rows = []
    for band in range(n_bands):
        mask = bands == band
        table = None
        for pred, truth in zip(preds, truths):
            table = accumulate(pred, truth, table, mask=mask)
        miou = None
        if table is not None and table.total:
            miou = _score(mean_iou(table)[1])
        rows.append(BandScore(band, float(edges[band]), float(edges[band + 1]), int(mask.sum()), miou))
    return rows


def _score(value: float) -> Optional[float]:
    """None for an undefined (nan) mean."""
    return None if np.isnan(value) else value


def build_report(table: ConfusionTable, bands: Optional[list[BandScore]] = None) -> MetricReport:
    per_class, miou = mean_iou(table)
    names = class_names(table.n_classes)[1:]
    return MetricReport(
        iou=geometric_iou(table),
        miou=_score(miou),
        stuff_miou=_score(stuff_miou(table)),
        per_class=dict(zip(names, per_class)),
        bands=bands or [],
    )


def evaluate(
    preds: Sequence[SemanticGrid], truths: Sequence[SemanticGrid], n_bands: int = 0
) -> tuple[ConfusionTable, MetricReport]:
    table = None
    for pred, truth in zip(preds, truths):
        table = accumulate(pred, truth, table)
    bands = range_stratified_miou(preds, truths, n_bands) if n_bands else []
    logger.info("evaluated %d scenes, %d voxels", len(truths), table.total)
    return table, build_report(table, bands)


def rows_to_csv(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(["" if v is None else (f"{v:.6f}" if isinstance(v, float) else v) for v in row])
    return buffer.getvalue()


def report_to_csv(report: MetricReport) -> str:
    rows = [("iou", report.iou), ("miou", report.miou), ("stuff_miou", report.stuff_miou)]
    rows += [(f"class.{name}", value) for name, value in report.per_class.items()]
    rows += [(f"band.{b.band}", b.miou) for b in report.bands]
    return rows_to_csv(["metric", "value"], rows)

from .confusion import ConfusionTable, accumulate, class_ious, geometric_iou, mean_iou, stuff_miou
from .report import (
    BandScore,
    MetricReport,
    build_report,
    class_names,
    evaluate,
    range_stratified_miou,
    report_to_csv,
    rows_to_csv,
)

__all__ = [
    "BandScore",
    "ConfusionTable",
    "MetricReport",
    "accumulate",
    "build_report",
    "class_ious",
    "class_names",
    "evaluate",
    "geometric_iou",
    "mean_iou",
    "range_stratified_miou",
    "report_to_csv",
    "rows_to_csv",
    "stuff_miou",
]

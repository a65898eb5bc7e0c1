"""Ablation studies: each row trains from the same seed and budget, then scores the validation scenes."""

import logging
from dataclasses import asdict, dataclass, field
from typing import Optional

from pyhub.polarocc.core.choices import AblationStudy, Topology
from pyhub.polarocc.metrics import rows_to_csv

from .config import ModelConfig
from .dataset import build_dataset, evaluate_samples, split_seeds
from .params import ParamStore
from .trainer import train

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AblationToggles:
    label: str
    polar: bool
    grp: bool
    pdconv: bool
    topology: str = Topology.SERIAL

    def apply(self, cfg: ModelConfig) -> ModelConfig:
        return cfg.variant(
            **{
                "polar": self.polar,
                "grp.enable": self.grp,
                "pdconv.enable": self.pdconv,
                "pdconv.topology": str(self.topology),
            }
        )


PDCONV_STRUCTURES = (
    Topology.NAIVE,
    Topology.ASSYM,
    Topology.SERIAL,
    Topology.PARALLEL,
    Topology.HYBRID_C,
    Topology.HYBRID_D,
)

STUDY_ROWS: dict[str, list[AblationToggles]] = {
    AblationStudy.COMPONENTS: [
        AblationToggles("baseline", polar=False, grp=False, pdconv=False),
        AblationToggles("polar", polar=True, grp=False, pdconv=False),
        AblationToggles("polar+grp", polar=True, grp=True, pdconv=False),
        AblationToggles("polar+pd", polar=True, grp=False, pdconv=True),
        AblationToggles("polar+grp+pd", polar=True, grp=True, pdconv=True),
    ],
    AblationStudy.PDCONV: [
        AblationToggles(str(t.value), polar=True, grp=True, pdconv=True, topology=t) for t in PDCONV_STRUCTURES
    ],
    AblationStudy.GRP: [
        AblationToggles("cartesian", polar=False, grp=False, pdconv=True),
        AblationToggles("polar", polar=True, grp=False, pdconv=True),
        AblationToggles("cartesian+grp", polar=False, grp=True, pdconv=True),
        AblationToggles("polar+grp", polar=True, grp=True, pdconv=True),
    ],
}


@dataclass
class AblationRow:
    label: str
    polar: bool
    grp: bool
    pdconv: str
    iou: float
    miou: Optional[float]
    stuff_miou: Optional[float]
    final_loss: Optional[float]


@dataclass
class AblationTable:
    study: str
    rows: list[AblationRow] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"study": self.study, "rows": [asdict(row) for row in self.rows]}

    def to_markdown(self) -> str:
        lines = [
            "| Row | Polar | GRP | PD-Conv | IoU | mIoU | stuff mIoU |",
            "|---|:-:|:-:|:-:|--:|--:|--:|",
        ]
        for row in self.rows:
            check = {True: "✓", False: ""}
            lines.append(
                f"| {row.label} | {check[row.polar]} | {check[row.grp]} | {row.pdconv} "
                f"| {_pct(row.iou)} | {_pct(row.miou)} | {_pct(row.stuff_miou)} |"
            )
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        header = ["label", "polar", "grp", "pdconv", "iou", "miou", "stuff_miou", "final_loss"]
        return rows_to_csv(header, [list(asdict(row).values()) for row in self.rows])

    def ordering_violations(self) -> list[str]:
        """Components study: pairs breaking full ≥ each single component ≥ Cartesian baseline on mIoU."""
        if self.study != AblationStudy.COMPONENTS or len(self.rows) < 2:
            return []
        baseline, *middle, full = self.rows
        pairs = [(full, row) for row in middle] + [(row, baseline) for row in middle] + [(full, baseline)]
        return [f"{lo.label} > {hi.label}" for hi, lo in pairs if _miou(lo) > _miou(hi)]


def _pct(value: Optional[float]) -> str:
    return "-" if value is None else f"{100.0 * value:.1f}"


def _miou(row: AblationRow) -> float:
    return 0.0 if row.miou is None else row.miou


def run_row(
    cfg: ModelConfig, toggles: AblationToggles, steps: Optional[int] = None, threads: Optional[int] = None
) -> AblationRow:
    row_cfg = toggles.apply(cfg)
    train_seeds, val_seeds = split_seeds(row_cfg)
    train_set = build_dataset(row_cfg, train_seeds, threads)
    val_set = build_dataset(row_cfg, val_seeds, threads) if val_seeds else train_set
    params = ParamStore.initialize(row_cfg)
    log = train(row_cfg, train_set, params, steps=steps)
    _, report = evaluate_samples(row_cfg, params, val_set, threads=threads)
    stack = row_cfg.pd_stack()
    logger.info("ablation row %s: iou %.4f miou %s", toggles.label, report.iou, _pct(report.miou))
    return AblationRow(
        label=toggles.label,
        polar=toggles.polar,
        grp=toggles.grp,
        pdconv=str(stack.topology.value),
        iou=report.iou,
        miou=report.miou,
        stuff_miou=report.stuff_miou,
        final_loss=log.losses[-1] if log.steps else None,
    )


def ablate(
    cfg: ModelConfig,
    study: str = AblationStudy.COMPONENTS,
    steps: Optional[int] = None,
    threads: Optional[int] = None,
) -> AblationTable:
    study = AblationStudy(study)
    table = AblationTable(study=study.value)
    for toggles in STUDY_ROWS[study]:
        table.rows.append(run_row(cfg, toggles, steps=steps, threads=threads))
    return table

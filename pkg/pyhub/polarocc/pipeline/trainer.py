"""Toy trainer: Adam with coupled L2 weight decay at a fixed step size."""

import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from pyhub.polarocc.core.exceptions import DataError, TrainingError
from pyhub.polarocc.core.json_utils import json_dumps
from pyhub.polarocc.tensor import Array

from .config import ModelConfig, TrainConfig
from .dataset import Sample
from .model import loss_and_grads
from .params import ParamStore

logger = logging.getLogger(__name__)


@dataclass
class TrainStep:
    step: int
    loss: float
    grad_norm: float
    scene: int


@dataclass
class TrainLog:
    steps: list[TrainStep] = field(default_factory=list)

    @property
    def losses(self) -> list[float]:
        return [s.loss for s in self.steps]

    def to_jsonl(self) -> str:
        return "".join(json_dumps(asdict(s), indent=None) + "\n" for s in self.steps)


class Adam:
    def __init__(self, params: ParamStore, hp: TrainConfig):
        self.params = params
        self.hp = hp
        self.t = 0
        self.m = {name: np.zeros_like(p.value) for name, p in params.items()}
        self.v = {name: np.zeros_like(p.value) for name, p in params.items()}

    def step(self) -> None:
        hp = self.hp
        self.t += 1
        if hp.lr == 0:
            return
        c1 = 1.0 - hp.beta1**self.t
        c2 = 1.0 - hp.beta2**self.t
        for name, p in self.params.items():
            g = p.grad + hp.weight_decay * p.value
            m, v = self.m[name], self.v[name]
            m *= hp.beta1
            m += (1.0 - hp.beta1) * g
            v *= hp.beta2
            v += (1.0 - hp.beta2) * g * g
            # 뷰가 유지되도록 제자리 갱신
            p.value -= hp.lr * (m / c1) / (np.sqrt(v / c2) + hp.eps)


def _store_grads(params: ParamStore, grads: dict[str, Array]) -> None:
    params.zero_grad()
    for name, grad in grads.items():
        params.accumulate(name, grad)


def train(
    cfg: ModelConfig,
    samples: Sequence[Sample],
    params: ParamStore,
    steps: Optional[int] = None,
    log_path: Union[str, Path, None] = None,
) -> TrainLog:
    """Cycle through ``samples`` in order for ``steps`` updates; the logged loss is the pre-update loss."""
    if not samples:
        raise DataError("training needs at least one scene")
    n_steps = cfg.train.steps if steps is None else steps
    optimizer = Adam(params, cfg.train)
    log = TrainLog()
    handle = open(log_path, "w", encoding="utf-8") if log_path is not None else None
    try:
        for step in range(n_steps):
            sample = samples[step % len(samples)]
            loss, grads = loss_and_grads(cfg, params, sample.inputs, sample.truth)
            if not np.isfinite(loss):
                raise TrainingError(step, f"non-finite loss {loss} on scene seed {sample.seed}")
            _store_grads(params, grads)
            record = TrainStep(step=step, loss=loss, grad_norm=params.grad_norm(), scene=sample.seed)
            if not np.isfinite(record.grad_norm):
                raise TrainingError(step, f"non-finite gradient norm on scene seed {sample.seed}")
            log.steps.append(record)
            if handle is not None:
                handle.write(json_dumps(asdict(record), indent=None) + "\n")
            logger.debug("step %d loss %.6f grad_norm %.6f", step, loss, record.grad_norm)
            optimizer.step()
    finally:
        if handle is not None:
            handle.close()
    if log.steps:
        logger.info("trained %d steps: loss %.4f -> %.4f", n_steps, log.steps[0].loss, log.steps[-1].loss)
    return log

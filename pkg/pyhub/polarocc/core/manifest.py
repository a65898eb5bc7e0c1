"""Run manifest written next to every command output."""

import logging
import os
import tempfile
import time
from dataclasses import asdict, dataclass, field
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path
from typing import Optional, Union

from django.utils import timezone

from .json_utils import json_dumps

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"


def tool_version() -> str:
    try:
        return version("pyhub-polarocc")
    except PackageNotFoundError:
        return "not found"


def atomic_write_bytes(path: Union[str, Path], data: bytes) -> Path:
    """Write to a temporary file in the target directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
    return path


def atomic_write_text(path: Union[str, Path], text: str) -> Path:
    return atomic_write_bytes(path, text.encode("utf-8"))


@dataclass
class RunManifest:
    command: str
    seed: Optional[int] = None
    config_path: Optional[str] = None
    inputs: list[str] = field(default_factory=list)
    outputs: list[str] = field(default_factory=list)
    version: str = field(default_factory=tool_version)
    started_at: str = field(default_factory=lambda: timezone.now().isoformat())
    wall_time: float = 0.0
    _t0: float = field(default_factory=time.perf_counter, repr=False)

    def add_output(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        self.outputs.append(str(path))
        return path

    def to_dict(self) -> dict:
        data = asdict(self)
        data.pop("_t0")
        return data

    def write(self, directory: Union[str, Path], name: str = MANIFEST_NAME) -> Path:
        self.wall_time = round(time.perf_counter() - self._t0, 6)
        path = atomic_write_text(Path(directory) / name, json_dumps(self.to_dict()))
        logger.debug("wrote manifest %s", path)
        return path

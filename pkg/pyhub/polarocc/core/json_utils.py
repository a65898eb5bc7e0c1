"""JSON utilities for reports, configs and fixtures."""

import json
from dataclasses import asdict, is_dataclass
from datetime import date, datetime
from pathlib import Path
from typing import Any, Optional

import numpy as np


class JSONEncoder(json.JSONEncoder):
    def default(self, o):
        if is_dataclass(o) and not isinstance(o, type):
            return asdict(o)
        elif isinstance(o, np.ndarray):
            return o.tolist()
        elif isinstance(o, np.integer):
            return int(o)
        elif isinstance(o, np.floating):
            return float(o)
        elif isinstance(o, np.bool_):
            return bool(o)
        elif isinstance(o, (datetime, date)):
            return o.isoformat()
        elif isinstance(o, Path):
            return str(o)
        elif isinstance(o, (set, frozenset)):
            return sorted(o)
        return super().default(o)


def json_dumps(json_data: Any, indent: Optional[int] = 2) -> str:
    return json.dumps(json_data, ensure_ascii=False, cls=JSONEncoder, indent=indent, allow_nan=False)


def json_loads_path(path: Path) -> Any:
    """파일을 읽어 JSON 으로 파싱합니다."""
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)

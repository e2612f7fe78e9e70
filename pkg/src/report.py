"""Deterministic CSV payloads and the JSON run report."""

import csv
import json
import math
from collections.abc import Iterable, Mapping, Sequence
from enum import Enum
from pathlib import Path
from typing import Any

import numpy as np

from src.logging_config import get_logger
from src.models import RunReport

logger = get_logger("report")

REPORT_NAME = "report.json"


def format_value(value: Any) -> str:
    """Shortest round-trip text for floats, plain text otherwise."""
    if isinstance(value, bool | np.bool_):
        return "true" if value else "false"
    if isinstance(value, int | np.integer):
        return str(int(value))
    if isinstance(value, float | np.floating):
        return repr(float(value))
    if value is None:
        return ""
    return str(value)


def json_safe(value: Any) -> Any:
    """Replace non-finite floats by strings, numpy scalars by Python ones, enums by values."""
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, Mapping):
        return {str(k): json_safe(v) for k, v in value.items()}
    if isinstance(value, list | tuple):
        return [json_safe(v) for v in value]
    if isinstance(value, np.ndarray):
        return [json_safe(v) for v in value.tolist()]
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, float | np.floating):
        number = float(value)
        return number if math.isfinite(number) else str(number)
    return value


def write_csv(path: Path, columns: Sequence[str], rows: Iterable[Mapping[str, Any]]) -> Path:
    """Comma-separated, header row, LF line endings, columns in the given order."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_value(row.get(column)) for column in columns])
    return path


class ReportWriter:
    """Collects the payloads of one run directory and writes report.json last."""

    def __init__(self, out_dir: Path):
        self.out_dir = out_dir
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.payloads: list[str] = []

    def csv(self, name: str, columns: Sequence[str], rows: Iterable[Mapping[str, Any]]) -> Path:
        path = write_csv(self.out_dir / name, columns, rows)
        self.payloads.append(name)
        logger.debug(f"wrote {path}")
        return path

    def finish(self, report: RunReport) -> Path:
        report.payloads = sorted(set(report.payloads) | set(self.payloads))
        data = json_safe(report.model_dump(mode="python", by_alias=True))
        path = self.out_dir / REPORT_NAME
        path.write_text(
            json.dumps(data, sort_keys=True, indent=2, ensure_ascii=False) + "\n",
            encoding="utf-8",
        )
        logger.info(f"report written to {path}")
        return path

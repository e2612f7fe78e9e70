"""Tests for CSV payloads and report.json."""

import json
import math

import numpy as np
import pytest

from src.models import FellerStatus, RunReport
from src.report import ReportWriter, format_value, json_safe, write_csv


@pytest.mark.parametrize(
    ("value", "text"),
    [
        (0.1, "0.1"),
        (np.float64(1.0) / 3.0, "0.3333333333333333"),
        (np.int64(7), "7"),
        (True, "true"),
        (np.bool_(False), "false"),
        (None, ""),
        ("identity", "identity"),
    ],
)
def test_format_value(value, text: str) -> None:
    assert format_value(value) == text


def test_json_safe_handles_numpy_and_non_finite() -> None:
    data = json_safe(
        {
            "inf": math.inf,
            "array": np.array([1.0, np.nan]),
            "status": FellerStatus.EXPLOSIVE,
            "pair": (np.int32(2), np.bool_(True)),
        }
    )
    assert data == {
        "inf": "inf",
        "array": [1.0, "nan"],
        "status": "explosive",
        "pair": [2, True],
    }
    json.dumps(data, allow_nan=False)


def test_write_csv_orders_columns(tmp_path) -> None:
    """Columns follow the given order; missing values are empty."""
    path = write_csv(tmp_path / "out.csv", ["b", "a"], [{"a": 1, "b": 0.5}, {"a": 2}])
    assert path.read_bytes() == b"b,a\n0.5,1\n,2\n"


class TestReportWriter:
    def test_report_lists_payloads_sorted(self, tmp_path) -> None:
        writer = ReportWriter(tmp_path / "run")
        writer.csv("z.csv", ["x"], [{"x": 1}])
        writer.csv("a.csv", ["x"], [{"x": 2}])
        report = RunReport(kind="scan", results={"mu": np.float64(0.5)})
        report.add_check("mu positive", True, 0.5)

        path = writer.finish(report)

        data = json.loads(path.read_text(encoding="utf-8"))
        assert data["payloads"] == ["a.csv", "z.csv"]
        assert data["results"] == {"mu": 0.5}
        assert data["checks"][0]["name"] == "mu positive"
        assert path.read_text(encoding="utf-8").endswith("}\n")

    def test_report_keys_are_sorted(self, tmp_path) -> None:
        writer = ReportWriter(tmp_path)
        text = writer.finish(RunReport(kind="growth")).read_text(encoding="utf-8")
        keys = list(json.loads(text))
        assert keys == sorted(keys)

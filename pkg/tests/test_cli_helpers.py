"""Tests for CLI helper behavior and exit codes."""

import json
from pathlib import Path

import pytest
import typer
from typer.testing import CliRunner

from src import config
from src.models import RunReport

CONFIG_DIR = Path(__file__).resolve().parent.parent / "config"

runner = CliRunner()


@pytest.fixture
def fresh_settings(monkeypatch, tmp_path):
    """Settings rebuilt from a clean environment for each CLI invocation."""
    monkeypatch.setattr(config, "_settings", None)
    monkeypatch.setenv("ELLIP_OUTPUT_DIR", str(tmp_path / "runs"))
    monkeypatch.chdir(tmp_path)
    return tmp_path


def test_version_callback_prints_version_and_exits(capsys) -> None:
    """The eager version callback should print the CLI version."""
    import src.cli as cli

    with pytest.raises(typer.Exit):
        cli.version_callback(True)

    assert "Ellip CLI v" in capsys.readouterr().out


def test_version_callback_ignores_false_value(capsys) -> None:
    """The version callback should be a no-op unless requested."""
    import src.cli as cli

    assert cli.version_callback(False) is None
    assert capsys.readouterr().out == ""


def test_build_overrides_folds_flags() -> None:
    """--out and --seed travel through the same override path as -O."""
    import src.cli as cli

    items = cli._build_overrides(["grid.n=11"], Path("runs/x"), 7)
    assert items == ["grid.n=11", "output_dir=runs/x", "seed=7"]
    assert cli._build_overrides(None, None, None) == []


@pytest.mark.parametrize(
    ("configured", "verbose", "expected"),
    [
        ("INFO", False, "INFO"),
        (" warning ", False, "WARNING"),
        ("ERROR", True, "DEBUG"),
        ("chatty", False, "INFO"),
    ],
)
def test_resolve_level(configured: str, verbose: bool, expected: str) -> None:
    """--verbose wins over ELLIP_LOG_LEVEL; unknown levels fall back to INFO."""
    from src.logging_config import resolve_level

    assert resolve_level(configured, verbose) == expected


def test_exit_code_reflects_checks() -> None:
    """A single failed check turns the exit status to 1."""
    import src.cli as cli

    report = RunReport(kind="scan")
    assert cli.exit_code(report) == 0
    report.add_check("fine", True)
    assert cli.exit_code(report) == 0
    report.add_check("broken", False, 2.0, 1.0)
    assert cli.exit_code(report) == cli.EXIT_CHECKS_FAILED


class TestCommands:
    """End-to-end invocations through Typer's test runner."""

    def test_presets_json(self, fresh_settings) -> None:
        from src.cli import app

        result = runner.invoke(app, ["presets", "--json"])
        assert result.exit_code == 0
        names = {entry["name"] for entry in json.loads(result.output)}
        assert {"identity", "sinusoidal", "degenerate", "explosive"} <= names

    def test_check_config_accepts_shipped_file(self, fresh_settings) -> None:
        from src.cli import app

        result = runner.invoke(app, ["check-config", str(CONFIG_DIR / "conserve.yaml")])
        assert result.exit_code == 0
        assert "Configuration valid" in result.output

    def test_check_config_rejects_unknown_key(self, fresh_settings) -> None:
        from src.cli import app

        path = fresh_settings / "bad.yaml"
        path.write_text("kind: scan\nresolution: 3\n", encoding="utf-8")
        result = runner.invoke(app, ["check-config", str(path)])
        assert result.exit_code == 2
        assert "resolution" in result.output

    def test_scan_writes_run_directory(self, fresh_settings) -> None:
        from src.cli import app

        out = fresh_settings / "scan-run"
        result = runner.invoke(app, ["scan", "--preset", "identity", "--out", str(out)])
        assert result.exit_code == 0
        assert (out / "report.json").exists()
        assert (out / "scan.csv").exists()

    def test_missing_positive_time_is_a_config_error(self, fresh_settings) -> None:
        from src.cli import app

        result = runner.invoke(
            app, ["kernel", "-O", "times=[0.0]", "-O", "grid={L: 2.0, n: 21}"]
        )
        assert result.exit_code == 2

    def test_unknown_preset_is_a_config_error(self, fresh_settings) -> None:
        from src.cli import app

        result = runner.invoke(app, ["scan", "--preset", "nosuch"])
        assert result.exit_code == 2
        assert "unknown preset" in result.output

    def test_grid_cap_is_a_numerical_failure(self, fresh_settings, monkeypatch) -> None:
        from src.cli import app

        monkeypatch.setenv("ELLIP_MAX_GRID_NODES", "100")
        result = runner.invoke(app, ["kernel", "-O", "grid.n=401"])
        assert result.exit_code == 3

    def test_export_operator(self, fresh_settings) -> None:
        from src.cli import app

        path = fresh_settings / "tiny.yaml"
        path.write_text("kind: kernel\ngrid:\n  L: 1.0\n  n: 3\n", encoding="utf-8")
        out = fresh_settings / "operator.csv"
        result = runner.invoke(app, ["export-operator", str(path), "--out", str(out)])
        assert result.exit_code == 0
        assert out.read_text(encoding="utf-8") == "row,col,value\n0,0,2.0\n"

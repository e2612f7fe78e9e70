"""Dead code checks: orphaned modules, unused exports, unwired experiment kinds."""

from __future__ import annotations

import ast
import functools
import re
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
SRC_DIR = ROOT / "src"
TESTS_DIR = ROOT / "tests"

# Console-script entry point; invoked, never imported by src.
ENTRY_POINTS = {"src.cli"}

# Exports kept for callers outside the package, as "module::name".
EXPORT_EXCEPTIONS: set[str] = set()


def _module_name(path: Path) -> str:
    parts = list(path.relative_to(ROOT).with_suffix("").parts)
    if parts[-1] == "__init__":
        parts.pop()
    return ".".join(parts)


def _python_files(*roots: Path) -> list[Path]:
    return sorted(
        path for root in roots for path in root.rglob("*.py") if "__pycache__" not in path.parts
    )


@functools.cache
def _modules() -> dict[str, Path]:
    return {_module_name(path): path for path in _python_files(SRC_DIR)}


def _absolute(module: str, is_package: bool, node: ast.ImportFrom) -> str | None:
    """Resolve `from .x import y` against the importing module."""
    if node.level == 0:
        return node.module
    package = module.split(".") if is_package else module.split(".")[:-1]
    package = package[: len(package) - (node.level - 1)]
    return ".".join([*package, *(node.module.split(".") if node.module else [])])


def _imported_modules(path: Path) -> set[str]:
    known = _modules()
    module = _module_name(path)
    names: list[str] = []
    for node in ast.walk(ast.parse(path.read_text(encoding="utf-8"))):
        if isinstance(node, ast.Import):
            names.extend(alias.name for alias in node.names)
        elif isinstance(node, ast.ImportFrom):
            base = _absolute(module, path.name == "__init__.py", node)
            if base:
                names.append(base)
                names.extend(f"{base}.{alias.name}" for alias in node.names if alias.name != "*")

    found = set()
    for name in names:
        parts = name.split(".")
        found.update(
            prefix
            for prefix in (".".join(parts[:i]) for i in range(1, len(parts) + 1))
            if prefix in known
        )
    found.discard(module)
    return found


def _exports(path: Path) -> list[str]:
    for node in ast.parse(path.read_text(encoding="utf-8")).body:
        if (
            isinstance(node, ast.Assign)
            and any(isinstance(t, ast.Name) and t.id == "__all__" for t in node.targets)
            and isinstance(node.value, ast.List | ast.Tuple)
        ):
            return [
                e.value
                for e in node.value.elts
                if isinstance(e, ast.Constant) and isinstance(e.value, str)
            ]
    return []


def test_source_modules_are_imported() -> None:
    """Every module under src/ is imported by another module or a test."""
    imported: set[str] = set()
    for path in _python_files(SRC_DIR, TESTS_DIR):
        imported |= _imported_modules(path)

    orphaned = sorted(set(_modules()) - imported - ENTRY_POINTS)
    assert not orphaned, "Orphaned module(s), remove or add to ENTRY_POINTS:\n  " + "\n  ".join(
        orphaned
    )


def test_all_exports_are_referenced() -> None:
    """Names listed in __all__ are used somewhere outside their defining module."""
    contents = {
        _module_name(path): path.read_text(encoding="utf-8")
        for path in _python_files(SRC_DIR, TESTS_DIR)
    }
    unreferenced = [
        f"{module}::{name}"
        for module, path in _modules().items()
        for name in _exports(path)
        if f"{module}::{name}" not in EXPORT_EXCEPTIONS
        and not any(
            re.search(rf"\b{re.escape(name)}\b", text)
            for other, text in contents.items()
            if other != module
        )
    ]
    assert not unreferenced, "Unreferenced export(s):\n  " + "\n  ".join(sorted(unreferenced))


def test_every_experiment_kind_is_wired() -> None:
    """Each kind has a runner and a CLI subcommand; no runner exists without a kind."""
    from src.cli import app
    from src.config import EXPERIMENT_KINDS
    from src.experiments import RUNNERS

    commands = {command.name for command in app.registered_commands}
    assert set(RUNNERS) == set(EXPERIMENT_KINDS)
    assert set(EXPERIMENT_KINDS) <= commands

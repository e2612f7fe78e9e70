"""
Ellip CLI.

Usage:
    ellip scan --preset sinusoidal                 # Ellipticity scan of a preset field
    ellip kernel --config config/kernel.yaml       # Heat kernel slices and semigroup checks
    ellip envelope --config config/envelope_free.yaml --out runs/free
    ellip dichotomy --threads 4                    # Conservation benchmark on three 1-d fields
    ellip recover --override analysis.a_factor=2   # Dotted overrides, YAML-parsed values
    ellip presets                                  # List coefficient presets
    ellip check-config config/conserve.yaml        # Validate an experiment file
    ellip export-operator config/kernel.yaml       # Stiffness matrix as row,col,value text

Exit status: 0 all checks passed, 1 a check failed, 2 invalid config, 3 numerical failure.
"""

import json
from pathlib import Path

import click
import typer
from rich.console import Console
from rich.table import Table

from src.coeff import preset_catalog
from src.config import (
    XDG_CONFIG_PATH,
    ExperimentConfig,
    Settings,
    get_settings,
    load_experiment_config,
)
from src.disc import assemble_stiffness, build_grid
from src.errors import ConfigError, LabError
from src.experiments import build_field, run
from src.logging_config import resolve_level, setup_logging
from src.models import RunReport

__version__ = "0.1.0"

EXIT_CHECKS_FAILED = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

console = Console()

ConfigOption = typer.Option(None, "--config", "-c", help="Experiment file (YAML or JSON)")
OutOption = typer.Option(None, "--out", "-o", help="Run directory for report.json and CSVs")
ThreadsOption = typer.Option(None, "--threads", "-j", min=1, help="Worker threads for sub-runs")
SeedOption = typer.Option(None, "--seed", min=0, help="Seed for randomized test vectors")
PresetOption = typer.Option(None, "--preset", "-p", help="Shortcut for field.preset")
OverrideOption = typer.Option(
    None, "--override", "-O", help="Dotted key=value override, repeatable"
)
JsonOption = typer.Option(False, "--json", help="Print the report as JSON")

# Global state
state = {"verbose": False}


def version_callback(value: bool) -> None:
    """Print version and exit."""
    if value:
        print(f"Ellip CLI v{__version__}")
        raise typer.Exit()


def _load_settings(threads: int | None = None) -> Settings:
    """Settings from the environment, with the --threads flag on top."""
    try:
        settings = get_settings()
    except Exception as e:
        console.print("[red]Settings error.[/red] Check ELLIP_* variables or config.env.\n")
        for error in getattr(e, "errors", lambda: [])():
            loc = ".".join(str(part) for part in error["loc"])
            console.print(f"  [red]✗[/red] {loc}: {error['msg']}")
        if not getattr(e, "errors", None):
            console.print(f"  [red]✗[/red] {e}")
        raise typer.Exit(code=EXIT_CONFIG) from None
    setup_logging(resolve_level(settings.log_level, state["verbose"]))
    if threads is not None:
        settings = settings.model_copy(update={"threads": threads})
    return settings


def _build_overrides(
    overrides: list[str] | None, out: Path | None, seed: int | None
) -> list[str]:
    """Fold --out and --seed into the override list so they pass the same validation."""
    items = list(overrides or [])
    if out is not None:
        items.append(f"output_dir={out}")
    if seed is not None:
        items.append(f"seed={seed}")
    return items


def _load_config(
    kind: str | None,
    config: Path | None,
    overrides: list[str] | None,
    preset: str | None,
    out: Path | None = None,
    seed: int | None = None,
) -> ExperimentConfig:
    try:
        return load_experiment_config(
            config, _build_overrides(overrides, out, seed), kind=kind, preset=preset
        )
    except ConfigError as e:
        console.print(f"[red]Configuration error.[/red]\n{e}")
        raise typer.Exit(code=EXIT_CONFIG) from None


def exit_code(report: RunReport) -> int:
    """0 when every recorded check passed, 1 otherwise."""
    return 0 if report.passed else EXIT_CHECKS_FAILED


def _print_report(report: RunReport) -> None:
    table = Table(title=f"{report.kind} checks")
    table.add_column("Check", style="cyan")
    table.add_column("Result")
    table.add_column("Value", justify="right")
    table.add_column("Threshold", justify="right")
    table.add_column("Detail", style="dim")
    for check in report.checks:
        verdict = "[green]pass[/green]" if check.passed else "[red]FAIL[/red]"
        value = "" if check.value is None else f"{check.value:.6g}"
        threshold = "" if check.threshold is None else f"{check.threshold:.6g}"
        table.add_row(check.name, verdict, value, threshold, check.detail)
    console.print(table)

    timings = ", ".join(f"{name} {seconds:.2f}s" for name, seconds in report.timings.items())
    console.print(f"[dim]Payloads: {', '.join(report.payloads) or 'none'}[/dim]")
    console.print(f"[dim]Timings: {timings}[/dim]")
    passed = sum(check.passed for check in report.checks)
    color = "green" if report.passed else "red"
    console.print(f"[{color}]{passed}/{len(report.checks)} checks passed[/{color}]")


def _execute(
    kind: str,
    config: Path | None,
    out: Path | None,
    threads: int | None,
    seed: int | None,
    preset: str | None,
    overrides: list[str] | None,
    json_format: bool,
) -> None:
    """Shared body of every experiment subcommand."""
    experiment = _load_config(kind, config, overrides, preset, out, seed)
    settings = _load_settings(threads)
    try:
        with console.status(f"[bold]Running {kind}..."):
            report = run(experiment, settings)
    except ConfigError as e:
        console.print(f"[red]Configuration error:[/red] {e}")
        raise typer.Exit(code=EXIT_CONFIG) from None
    except LabError as e:
        console.print(f"[red]Numerical failure ({type(e).__name__}):[/red] {e}")
        diagnostics = getattr(e, "diagnostics", None)
        if diagnostics:
            console.print_json(data=diagnostics, default=str)
        raise typer.Exit(code=EXIT_NUMERICAL) from None

    if json_format:
        print(json.dumps(report.model_dump(mode="json", by_alias=True), indent=2, default=str))
    else:
        _print_report(report)
    raise typer.Exit(code=exit_code(report))


_KIND_HELP = {
    "scan": "Sample C(x) on a lattice and report the ellipticity constants.",
    "growth": "Build the coefficient-adapted distance, ball volumes and growth verdicts.",
    "kernel": "Compute heat kernel slices and check the semigroup properties.",
    "envelope": "Fit two-sided Gaussian and profile envelopes to computed kernels.",
    "conserve": "Mass defect of S_t applied to a bump, across box sizes.",
    "recover": "Recover mu and lambda from the fitted kernel envelopes.",
    "oscillate": "Form of oscillating test functions against the k^-2 h(phi) law.",
    "dgcheck": "Davies-Gaffney weighted contraction and integrated energy bound.",
    "epsfamily": "Semigroups of C + eps I as eps decreases.",
    "dichotomy": "Feller test, growth verdicts and mass defects on the 1-d benchmark.",
}

_QUICK_REF_ITEMS = [
    *[(kind, "[--config PATH] [--preset NAME] [--override k=v]") for kind in _KIND_HELP],
    ("presets", "[--json]"),
    ("check-config", "PATH [--override k=v]"),
    ("export-operator", "PATH [--out FILE]"),
]


class _HelpGroup(typer.core.TyperGroup):
    """Custom group that adds a boxed quick-reference section to --help."""

    def format_help(self, ctx: click.Context, formatter: click.HelpFormatter) -> None:
        if not typer.core.HAS_RICH or self.rich_markup_mode is None:
            super().format_help(ctx, formatter)
            with formatter.section("Quick Reference"):
                formatter.write_dl(_QUICK_REF_ITEMS)
            return

        from typer import rich_utils

        rich_utils.rich_format_help(
            obj=self,
            ctx=ctx,
            markup_mode=self.rich_markup_mode,
        )

        quick_commands = [
            click.Command(name=command, help=usage, short_help=usage)
            for command, usage in _QUICK_REF_ITEMS
        ]
        rich_utils._print_commands_panel(
            name="Quick Reference",
            commands=quick_commands,
            markup_mode=self.rich_markup_mode,
            console=rich_utils._get_rich_console(),
            cmd_len=max(len(command) for command, _ in _QUICK_REF_ITEMS),
        )


app = typer.Typer(
    name="ellip",
    help="Ellip - numerical lab for divergence-form elliptic operators",
    no_args_is_help=True,
    add_completion=False,
    cls=_HelpGroup,
    rich_markup_mode="markdown",
)


@app.callback()
def main(
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Enable verbose logging output."),
    version: bool | None = typer.Option(
        None,
        "--version",
        callback=version_callback,
        is_eager=True,
        help="Show version and exit.",
    ),
) -> None:
    """
    Ellip - numerical lab for divergence-form elliptic operators
    """
    state["verbose"] = verbose
    setup_logging(resolve_level("INFO", verbose))


def _register(kind: str) -> None:
    def command(
        config: Path | None = ConfigOption,
        out: Path | None = OutOption,
        threads: int | None = ThreadsOption,
        seed: int | None = SeedOption,
        preset: str | None = PresetOption,
        override: list[str] | None = OverrideOption,
        json_format: bool = JsonOption,
    ) -> None:
        _execute(kind, config, out, threads, seed, preset, override, json_format)

    command.__doc__ = _KIND_HELP[kind]
    app.command(kind)(command)


for _kind in _KIND_HELP:
    _register(_kind)


@app.command()
def presets(
    json_format: bool = typer.Option(False, "--json", help="Output as JSON"),
) -> None:
    """List coefficient presets with their parameters."""
    catalog = preset_catalog()
    if json_format:
        data = [
            {
                "name": p.name,
                "description": p.description,
                "params": p.params,
                "dimensions": list(p.dimensions),
            }
            for p in catalog
        ]
        print(json.dumps(data, indent=2))
        return

    table = Table(title="Coefficient presets")
    table.add_column("Name", style="cyan")
    table.add_column("Field")
    table.add_column("Parameters", style="green")
    table.add_column("d", justify="right")
    for p in catalog:
        params = ", ".join(f"{k}={v:g}" for k, v in p.params.items()) or "-"
        table.add_row(p.name, p.description, params, ",".join(map(str, p.dimensions)))
    console.print(table)


@app.command("check-config")
def check_config(
    config: Path = typer.Argument(..., help="Experiment file to validate"),
    override: list[str] | None = OverrideOption,
) -> None:
    """Validate an experiment file and the environment settings without running anything."""
    console.print("[bold]Verifying configuration...[/bold]\n")

    console.print("[dim]Settings search paths:[/dim]")
    xdg_config = XDG_CONFIG_PATH / "config.env"
    xdg_status = "[green](exists)[/green]" if xdg_config.exists() else "[dim](not found)[/dim]"
    console.print(f"  1. {xdg_config} {xdg_status}")
    local_env = Path(".env")
    local_status = "[green](exists)[/green]" if local_env.exists() else "[dim](not found)[/dim]"
    console.print(f"  2. {local_env.absolute()} {local_status}")
    console.print()

    settings = _load_settings()
    console.print("[green]✓[/green] Settings loaded")
    console.print(f"  Output dir: {settings.output_dir}")
    console.print(f"  Threads: {settings.threads}")
    console.print(f"  Linear solver: {settings.linear_solver}")

    experiment = _load_config(None, config, override, None)
    try:
        field = build_field(experiment.field)
    except LabError as e:
        console.print(f"[red]✗[/red] Field: {e}")
        raise typer.Exit(code=EXIT_CONFIG) from None
    console.print(f"[green]✓[/green] Experiment: {experiment.kind}")
    console.print(f"  Field: {field.describe()}")
    console.print(f"  Grid: L={experiment.grid.half_widths}, n={experiment.grid.n}")
    console.print("\n[green]✓ Configuration valid[/green]")


@app.command("export-operator")
def export_operator(
    config: Path = typer.Argument(..., help="Experiment file naming the field and grid"),
    out: Path = typer.Option(Path("operator.csv"), "--out", "-o", help="Destination file"),
    override: list[str] | None = OverrideOption,
) -> None:
    """Write the stiffness matrix of the configured field and grid as row,col,value lines."""
    experiment = _load_config(None, config, override, None)
    settings = _load_settings()
    try:
        field = build_field(experiment.field)
        grid = build_grid(
            field.d, experiment.grid.L, experiment.grid.n, max_nodes=settings.max_grid_nodes
        )
        Hop = assemble_stiffness(field, grid)
    except ConfigError as e:
        console.print(f"[red]Configuration error:[/red] {e}")
        raise typer.Exit(code=EXIT_CONFIG) from None
    except LabError as e:
        console.print(f"[red]Assembly failed:[/red] {e}")
        raise typer.Exit(code=EXIT_NUMERICAL) from None
    out.parent.mkdir(parents=True, exist_ok=True)
    path = Hop.export_coo(out)
    console.print(f"[green]✓[/green] {Hop.matrix.nnz} entries written to {path}")


def cli() -> None:
    """Entry point."""
    try:
        app()
    except KeyboardInterrupt:
        console.print("\n[dim]Aborted.[/dim]")
        raise SystemExit(130) from None


if __name__ == "__main__":
    cli()

"""Configuration management using Pydantic Settings and strict experiment files."""

from pathlib import Path
from typing import Any, Literal, Self, get_args

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from src.coeff.presets import preset_catalog
from src.errors import ConfigError

# XDG config directory for user configuration
XDG_CONFIG_PATH = Path.home() / ".config" / "ellip"

ExperimentKind = Literal[
    "scan",
    "growth",
    "kernel",
    "envelope",
    "conserve",
    "recover",
    "oscillate",
    "dgcheck",
    "epsfamily",
    "dichotomy",
]

EXPERIMENT_KINDS: tuple[str, ...] = get_args(ExperimentKind)


class Settings(BaseSettings):
    """Solver and runtime settings loaded from the environment (ELLIP_*)."""

    model_config = SettingsConfigDict(
        env_prefix="ELLIP_",
        env_file=[
            XDG_CONFIG_PATH / "config.env",  # User config (lower priority)
            ".env",  # Project .env (higher priority)
        ],
        env_file_encoding="utf-8",
        extra="ignore",
    )

    # Runtime
    log_level: str = Field(default="INFO", description="Logging level")
    output_dir: Path = Field(default=Path("runs"), description="Parent directory for run output")
    threads: int = Field(default=1, ge=1, le=64, description="Worker threads for sub-runs")
    max_grid_nodes: int = Field(
        default=2_000_000, ge=27, description="Cap on n^d for a single grid"
    )

    # Exponential action
    krylov_min_dim: int = Field(default=30, ge=2, description="Initial Krylov dimension")
    krylov_max_dim: int = Field(default=200, ge=2, description="Krylov dimension cap")
    krylov_max_substeps: int = Field(
        default=16, ge=1, description="Cap on time substeps before the implicit fallback"
    )
    implicit_min_substeps: int = Field(default=64, ge=1, description="Initial implicit substeps")
    implicit_max_substeps: int = Field(default=4096, ge=1, description="Implicit substep cap")
    evolve_rtol: float = Field(default=1e-8, gt=0, lt=1, description="Relative L2 target")
    implicit_rtol: float = Field(
        default=1e-6, gt=0, lt=1, description="Agreement of successive implicit refinements"
    )
    cg_rtol: float = Field(default=1e-10, gt=0, lt=1, description="PCG relative residual")
    linear_solver: Literal["auto", "cg", "direct"] = Field(
        default="auto",
        description="Implicit solves: sparse LU, Jacobi-preconditioned CG, or auto by size",
    )

    @model_validator(mode="after")
    def check_ranges(self) -> Self:
        """Minimums may not exceed their caps."""
        if self.krylov_min_dim > self.krylov_max_dim:
            raise ValueError("krylov_min_dim exceeds krylov_max_dim")
        if self.implicit_min_substeps > self.implicit_max_substeps:
            raise ValueError("implicit_min_substeps exceeds implicit_max_substeps")
        return self


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class FieldSpec(_Strict):
    """Coefficient field: a preset with parameters, or explicit upper-triangular entries."""

    d: int = Field(default=1, ge=1, le=3)
    preset: str | None = None
    params: dict[str, float] = Field(default_factory=dict)
    entries: list[str] | None = Field(
        default=None, description="Row-major upper-triangular expressions"
    )
    label: str | None = None

    @model_validator(mode="after")
    def one_source(self) -> Self:
        if (self.preset is None) == (self.entries is None):
            raise ValueError("give exactly one of 'preset' or 'entries'")
        if self.entries is not None:
            expected = self.d * (self.d + 1) // 2
            if len(self.entries) != expected:
                raise ValueError(f"d={self.d} needs {expected} entries, got {len(self.entries)}")
            if self.params:
                raise ValueError("'params' only applies to presets")
        else:
            self._check_preset()
        return self

    def _check_preset(self) -> None:
        catalog = {p.name: p for p in preset_catalog()}
        preset = catalog.get(self.preset or "")
        if preset is None:
            raise ValueError(f"unknown preset {self.preset!r} (known: {', '.join(catalog)})")
        unknown = sorted(set(self.params) - set(preset.params))
        if unknown:
            raise ValueError(f"preset {preset.name!r} has no parameter(s) {unknown}")
        if self.d not in preset.dimensions:
            raise ValueError(f"preset {preset.name!r} is defined for d in {preset.dimensions}")

    @property
    def name(self) -> str:
        return self.label or self.preset or "custom"


class GridSpec(_Strict):
    L: float = Field(default=10.0, gt=0, description="Box half-width")
    L_list: list[float] | None = Field(default=None, description="Half-widths for L-sweeps")
    n: int = Field(default=401, ge=3, description="Nodes per axis")
    spacing_fixed: bool = Field(
        default=True, description="Keep h fixed across an L-sweep by scaling n"
    )

    @model_validator(mode="after")
    def positive_sweep(self) -> Self:
        if self.L_list is not None and (not self.L_list or min(self.L_list) <= 0):
            raise ValueError("L_list must hold positive half-widths")
        return self

    @property
    def half_widths(self) -> list[float]:
        return list(self.L_list) if self.L_list else [self.L]


class AnalysisSpec(_Strict):
    """Windows and tolerances of the analysis steps."""

    scan_half_width: float = Field(default=3.0, gt=0)
    samples_per_axis: int = Field(default=21, ge=2)
    s_max: float = Field(default=1e3, gt=0, description="Largest radius of the growth profile")
    s_points: int = Field(default=400, ge=16)
    angular_samples: int = Field(default=64, ge=4)
    fit_window: tuple[float, float] | None = None
    tacklind_R: float | None = Field(default=None, gt=0)
    tacklind_r_max: float | None = Field(default=None, gt=0)
    t_window: list[float] = Field(default_factory=lambda: [0.125, 0.25, 0.5])
    boundary_margin: float = Field(default=0.25, gt=0, lt=1, description="Fraction of L")
    kernel_floor: float = Field(default=1e-300, gt=0)
    noise_floor: float = Field(
        default=1e-10, ge=0, lt=1, description="Kernel values below this fraction of the peak"
    )
    u_max: float = Field(default=40.0, gt=0, description="Largest |x-y|^2/t in the fit window")
    source_offsets: list[float] = Field(
        default_factory=lambda: [0.0, -0.125, 0.125],
        description="Kernel sources along x1 as fractions of L",
    )
    symmetry_pairs: int = Field(default=10, ge=1)
    sym_tol: float = Field(default=1e-6, gt=0)
    a_factor: float = Field(default=1.0, gt=0)
    bracket_tolerance: float = Field(default=0.05, ge=0)
    k_list: list[float] = Field(default_factory=lambda: [4.0, 8.0, 16.0])
    xi: list[float] | None = Field(default=None, description="Oscillation direction")
    tau_list: list[float] = Field(default_factory=lambda: [0.0, 0.5, 1.0, 2.0])
    psi_cap: float = Field(default=2.0, gt=0, description="Clip level of the distance weight")
    feller_cutoff: float = Field(default=1e6, gt=1)

    @model_validator(mode="after")
    def ordered(self) -> Self:
        if self.fit_window is not None and not 0 < self.fit_window[0] < self.fit_window[1]:
            raise ValueError("fit_window must satisfy 0 < lo < hi")
        if min(self.t_window) <= 0:
            raise ValueError("t_window must be positive")
        return self


class ExperimentConfig(_Strict):
    """One experiment run; unknown keys at any level are rejected."""

    kind: ExperimentKind
    field: FieldSpec = Field(default_factory=lambda: FieldSpec(preset="identity"))
    fields: list[FieldSpec] | None = Field(
        default=None, description="Benchmark fields for dichotomy runs"
    )
    grid: GridSpec = Field(default_factory=GridSpec)
    times: list[float] = Field(default_factory=lambda: [0.5])
    epsilons: list[float] = Field(default_factory=lambda: [0.1, 0.05, 0.025, 0.0125])
    bump_radius: float = Field(default=1.0, gt=0, description="Support radius of initial data")
    analysis: AnalysisSpec = Field(default_factory=AnalysisSpec)
    output_dir: Path | None = None
    seed: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def consistent(self) -> Self:
        if min(self.times) < 0:
            raise ValueError("times must be non-negative")
        if any(b >= a for a, b in zip(self.epsilons, self.epsilons[1:], strict=False)):
            raise ValueError("epsilons must be strictly decreasing")
        if self.epsilons and self.epsilons[-1] < 0:
            raise ValueError("epsilons must be non-negative")
        if self.fields is not None and any(f.d != 1 for f in self.fields):
            raise ValueError("dichotomy fields must be one-dimensional")
        return self


def _format_errors(exc: ValidationError) -> list[str]:
    return [
        f"{'.'.join(str(part) for part in err['loc']) or '<root>'}: {err['msg']}"
        for err in exc.errors()
    ]


def apply_overrides(data: dict[str, Any], overrides: list[str]) -> dict[str, Any]:
    """Apply dotted key=value overrides; values are parsed as YAML scalars or lists."""
    for item in overrides:
        key, sep, raw = item.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"override {item!r} is not of the form key=value")
        try:
            value = yaml.safe_load(raw)
        except yaml.YAMLError as exc:
            raise ConfigError(f"override {item!r}: {exc}") from exc
        parts = key.strip().split(".")
        node = data
        for part in parts[:-1]:
            child = node.setdefault(part, {})
            if not isinstance(child, dict):
                raise ConfigError(f"override {item!r}: {part!r} is not a mapping")
            node = child
        node[parts[-1]] = value
    return data


def read_config_file(path: Path) -> dict[str, Any]:
    """Read a YAML or JSON experiment file into a mapping."""
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"invalid {path.name}: top-level structure must be a mapping")
    return data


def load_experiment_config(
    path: Path | None = None,
    overrides: list[str] | None = None,
    kind: str | None = None,
    preset: str | None = None,
) -> ExperimentConfig:
    """Build an ExperimentConfig from a file, a kind, a preset shortcut and overrides."""
    data = read_config_file(path) if path is not None else {}
    if kind is not None:
        if data.get("kind", kind) != kind:
            raise ConfigError(f"config declares kind {data['kind']!r}, command is {kind!r}")
        data["kind"] = kind
    if preset is not None:
        field = data.get("field")
        d = field.get("d", 1) if isinstance(field, dict) else 1
        data["field"] = {"preset": preset, "d": d}
    apply_overrides(data, overrides or [])

    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        rendered = "\n  - ".join(_format_errors(exc))
        source = path.name if path is not None else "experiment config"
        raise ConfigError(f"Invalid {source}:\n  - {rendered}") from exc


_settings: Settings | None = None


def get_settings() -> Settings:
    """Get application settings (singleton)."""
    global _settings
    if _settings is None:
        _settings = Settings()
    return _settings

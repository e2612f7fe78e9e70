"""
Experiment runner: one function per experiment kind.

Each runner receives the validated config, records results and invariant
checks on a RunReport and writes its CSV payloads through a ReportWriter.
Independent sub-runs (kernel columns, L-sweeps, benchmark fields) go
through a thread pool; results are keyed and emitted in sorted order.
"""

import concurrent.futures
import dataclasses
import math
import time
from collections.abc import Callable, Hashable, Iterator, Sequence
from contextlib import contextmanager
from pathlib import Path
from typing import Any, TypeVar

import numpy as np

from src.analysis import (
    EnvelopeWindow,
    envelope_to_profiles,
    feller_oracle_1d,
    fit_gaussian_envelope,
    fit_profile_envelope,
    moment_forms,
    oscillation_extract,
    recover_lambda,
    recover_mu,
)
from src.coeff import (
    CoefficientField,
    GrowthProfile,
    ball_volume,
    build_preset,
    classify_growth,
    ellipticity_scan,
    nu_profile,
    rho_distance,
)
from src.coeff.field import lattice
from src.config import ExperimentConfig, FieldSpec, Settings, get_settings
from src.disc import (
    Grid,
    GridFunction,
    StiffnessOperator,
    assemble_stiffness,
    build_grid,
    bump,
    cutoff_eta,
)
from src.errors import ConfigError, LabError
from src.logging_config import get_logger
from src.models import EllipticityEstimate, FellerStatus, Provenance, RunReport, TikhonovStatus
from src.report import ReportWriter
from src.semigroup import (
    KernelSlice,
    clipped_distance_weight,
    davies_gaffney_check,
    epsilon_family_compare,
    evolve,
    extract_kernel,
    ground_state,
    kernel_symmetry_defect,
    mass_defect,
)

logger = get_logger("experiments")

K = TypeVar("K", bound=Hashable)
V = TypeVar("V")

SEMIGROUP_RTOL = 1e-6
SUBMARKOV_SLACK = 1e-8
CONTRACTION_SLACK = 1e-10
MOMENT_FORM_RTOL = 1e-8
COVERAGE_TOLERANCE = 1e-9
DEVIATION_TOLERANCE = 0.05
RICHARDSON_TOLERANCE = 0.01
GAFFNEY_RTOL = 1e-6
CONSERVATIVE_SHRINK = 2.0
EXPLOSIVE_STABILITY = 0.1
EXPLOSIVE_FLOOR = 0.05
DEFECT_FLOOR = 1e-10
CUTOFF_FRACTION = 0.45

DEFAULT_DICHOTOMY_FIELDS = ("identity", "power-growth", "explosive")

CONSERVE_COLUMNS = ["field", "L", "n", "t", "defect", "cutoff_R", "cutoff_defect"]
RECOVER_COLUMNS = [
    "profile",
    "mu",
    "lambda",
    "rho_moment",
    "rho_volume_moment",
    "sigma_moment",
    "sigma_volume_moment",
]
GAFFNEY_COLUMNS = [
    "tau",
    "t",
    "lhs",
    "rhs",
    "slack",
    "integrated",
    "integrated_error",
    "integrated_bound",
    "integrated_slack",
]

Runner = Callable[["ExperimentContext"], None]


@dataclasses.dataclass
class ExperimentContext:
    config: ExperimentConfig
    settings: Settings
    report: RunReport
    writer: ReportWriter

    @contextmanager
    def timed(self, name: str) -> Iterator[None]:
        start = time.perf_counter()
        try:
            yield
        finally:
            self.report.timings[name] = round(time.perf_counter() - start, 6)


def build_field(spec: FieldSpec) -> CoefficientField:
    """Instantiate a preset or explicit field from its spec."""
    if spec.preset is not None:
        field = build_preset(spec.preset, spec.d, spec.params)
    else:
        assert spec.entries is not None
        field = CoefficientField.from_texts(spec.d, spec.entries, spec.name)
    if spec.label is not None:
        field = dataclasses.replace(field, label=spec.label)
    return field


def sweep_nodes(n: int, L0: float, L: float, spacing_fixed: bool) -> int:
    """Nodes per axis for half-width L, keeping h = 2 L0 / (n - 1) when spacing is fixed."""
    if not spacing_fixed:
        return n
    return int(round((n - 1) * L / L0)) + 1


def run_parallel(tasks: dict[K, Callable[[], V]], max_workers: int) -> dict[K, V]:
    """Run keyed thunks on a thread pool; the result dict is ordered by key insertion."""
    results: dict[K, V] = {}
    with concurrent.futures.ThreadPoolExecutor(max_workers=max_workers) as executor:
        future_to_key = {executor.submit(task): key for key, task in tasks.items()}
        for future in concurrent.futures.as_completed(future_to_key):
            results[future_to_key[future]] = future.result()
    return {key: results[key] for key in tasks}


def _grid(ctx: ExperimentContext, d: int, L: float | None = None) -> Grid:
    spec = ctx.config.grid
    half_width = spec.L if L is None else L
    n = sweep_nodes(spec.n, spec.half_widths[0], half_width, spec.spacing_fixed)
    return build_grid(d, half_width, n, max_nodes=ctx.settings.max_grid_nodes)


def _box(half_width: float, d: int) -> list[tuple[float, float]]:
    return [(-half_width, half_width)] * d


def _source_points(grid: Grid, offsets: Sequence[float]) -> list[tuple[float, ...]]:
    points = []
    for offset in offsets:
        point = [0.0] * grid.d
        point[0] = offset * grid.L
        points.append(tuple(point))
    return points


def _kernel_slices(
    ctx: ExperimentContext, Hop: StiffnessOperator, times: Sequence[float]
) -> dict[tuple[int, float], KernelSlice]:
    sources = _source_points(Hop.grid, ctx.config.analysis.source_offsets)
    tasks: dict[tuple[int, float], Callable[[], KernelSlice]] = {
        (i, t): (lambda y=y, t=t: extract_kernel(Hop, y, t, ctx.settings))
        for i, y in enumerate(sources)
        for t in times
    }
    return run_parallel(tasks, ctx.settings.threads)


def _coordinate_columns(d: int) -> list[str]:
    return [f"x{i + 1}" for i in range(d)]


def _kernel_rows(kernel: KernelSlice, source: int) -> list[dict[str, Any]]:
    """All nodes in 1-d; the x1 line through the source otherwise."""
    grid = kernel.values.grid
    nodes = grid.nodes()
    on_line = np.all(np.isclose(nodes[:, 1:], np.asarray(kernel.y[1:])), axis=1)
    rows = []
    for index in np.flatnonzero(on_line):
        row: dict[str, Any] = {"t": kernel.t, "source": source}
        row.update({f"x{i + 1}": float(nodes[index, i]) for i in range(grid.d)})
        row["kernel"] = float(kernel.values.values[index])
        rows.append(row)
    return rows


def run_scan(ctx: ExperimentContext) -> None:
    config = ctx.config
    field = build_field(config.field)
    box = _box(config.analysis.scan_half_width, field.d)
    with ctx.timed("scan"):
        estimate = ellipticity_scan(field, box, config.analysis.samples_per_axis)
    ctx.report.results["field"] = field.describe()
    ctx.report.results["estimate"] = estimate.model_dump(by_alias=True)
    ctx.report.results["strongly_elliptic"] = estimate.strongly_elliptic
    assert estimate.mu is not None and estimate.lambda_ is not None
    ctx.report.add_check("mu <= lambda", estimate.mu <= estimate.lambda_, estimate.mu)

    points = lattice(box, config.analysis.samples_per_axis)
    eigenvalues = np.linalg.eigvalsh(field.matrices(points))
    columns = [*_coordinate_columns(field.d), "eig_min", "eig_max"]
    rows = []
    for point, eig in zip(points, eigenvalues, strict=True):
        row = dict(zip(columns, [*point.tolist(), eig[0], eig[-1]], strict=True))
        rows.append(row)
    ctx.writer.csv("scan.csv", columns, rows)


def _growth_profile(ctx: ExperimentContext, field: CoefficientField, s_max: float) -> GrowthProfile:
    analysis = ctx.config.analysis
    s_grid = np.linspace(0.0, s_max, analysis.s_points)
    return rho_distance(nu_profile(field, s_grid, analysis.angular_samples))


def run_growth(ctx: ExperimentContext) -> None:
    config = ctx.config
    analysis = config.analysis
    field = build_field(config.field)
    with ctx.timed("growth"):
        profile = _growth_profile(ctx, field, analysis.s_max)
        volume = ball_volume(profile)
        verdict = classify_growth(
            volume, analysis.fit_window, analysis.tacklind_R, analysis.tacklind_r_max
        )
    assert profile.rho is not None
    ctx.report.results["field"] = field.describe()
    ctx.report.results["rho"] = {
        "limit": profile.rho_limit,
        "divergent": profile.rho_divergent,
        "tail_exponent": profile.tail_q,
    }
    ctx.report.results["verdict"] = verdict.model_dump()
    ctx.report.add_check(
        "tikhonov satisfied implies tacklind divergent",
        verdict.consistent,
        detail=f"{verdict.tikhonov.value} / {verdict.tacklind.value}",
    )
    ctx.writer.csv(
        "growth_profile.csv",
        ["s", "nu", "rho"],
        (
            {"s": s, "nu": nu, "rho": rho}
            for s, nu, rho in zip(profile.s_grid, profile.nu, profile.rho, strict=True)
        ),
    )
    ctx.writer.csv(
        "volume.csv",
        ["r", "log_volume"],
        (
            {"r": r, "log_volume": v}
            for r, v in zip(volume.r_grid, volume.log_volume, strict=True)
        ),
    )


def _symmetry_pairs(grid: Grid, count: int, seed: int) -> list[tuple[int, int]]:
    inner = np.flatnonzero(grid.distance_to_boundary(grid.nodes()) >= 0.5 * grid.L)
    rng = np.random.default_rng(seed)
    chosen = rng.choice(inner, size=(count, 2), replace=True)
    return [(int(x), int(y)) for x, y in chosen if x != y]


def run_kernel(ctx: ExperimentContext) -> None:
    config = ctx.config
    field = build_field(config.field)
    grid = _grid(ctx, field.d)
    with ctx.timed("assemble"):
        Hop = assemble_stiffness(field, grid)
    ctx.report.results["grid"] = grid.describe()
    ctx.report.results["m_matrix"] = Hop.is_m_matrix()
    ctx.report.results["stencil"] = Hop.stencil
    times = [t for t in config.times if t > 0]
    if not times:
        raise ConfigError("kernel runs need a positive time")

    with ctx.timed("kernels"):
        slices = _kernel_slices(ctx, Hop, times)
    rows: list[dict[str, Any]] = []
    masses = []
    for (source, _t), kernel in slices.items():
        masses.append(kernel.mass)
        rows.extend(_kernel_rows(kernel, source))
        peak = kernel.report.sup_norm
        ctx.report.add_check(
            f"kernel non-negative (source {source}, t={kernel.t:g})",
            float(kernel.values.values.min()) >= -SUBMARKOV_SLACK * peak,
            float(kernel.values.values.min()),
        )
    ctx.report.add_check("kernel mass <= 1", max(masses) <= 1.0 + SUBMARKOV_SLACK, max(masses))
    ctx.writer.csv("kernel.csv", ["t", "source", *_coordinate_columns(grid.d), "kernel"], rows)

    t = times[0]
    phi = bump(grid, config.bump_radius)
    with ctx.timed("semigroup checks"):
        evolved = evolve(Hop, phi, t, ctx.settings)
        first = slices[(0, t)]
        twice = evolve(Hop, first.values, t, ctx.settings).result
        direct = extract_kernel(Hop, first.y_index, 2.0 * t, ctx.settings).values
        law_error = GridFunction(twice.values - direct.values, grid).l2_norm() / direct.l2_norm()
        pairs = _symmetry_pairs(grid, config.analysis.symmetry_pairs, config.seed)
        symmetry = kernel_symmetry_defect(Hop, t, pairs, ctx.settings)
        ground = ground_state(Hop)
        decayed = evolve(Hop, ground.vector, t, ctx.settings).result
        expected = ground.vector * math.exp(-ground.eigenvalue * t)
        decay_error = (
            GridFunction(decayed.values - expected.values, grid).l2_norm() / expected.l2_norm()
        )

    values = evolved.result.values
    ctx.report.add_check(
        "submarkov: 0 <= S_t phi <= 1",
        values.min() >= -SUBMARKOV_SLACK and values.max() <= 1.0 + SUBMARKOV_SLACK,
        float(values.max()),
    )
    ctx.report.add_check(
        "L2 contraction", evolved.l2_ratio <= 1.0 + CONTRACTION_SLACK, evolved.l2_ratio, 1.0
    )
    ctx.report.add_check(
        "semigroup law S_t S_t = S_2t", law_error <= SEMIGROUP_RTOL, law_error, SEMIGROUP_RTOL
    )
    sym_tol = config.analysis.sym_tol
    ctx.report.add_check("kernel symmetry", symmetry.worst <= sym_tol, symmetry.worst, sym_tol)
    ctx.report.add_check(
        "ground state decays like exp(-lambda_1 t)",
        decay_error <= SEMIGROUP_RTOL,
        decay_error,
        SEMIGROUP_RTOL,
    )
    ctx.report.results["evolve"] = evolved.summary()
    ctx.report.results["ground_state"] = {
        "eigenvalue": ground.eigenvalue,
        "iterations": ground.iterations,
    }


def _envelope_inputs(
    ctx: ExperimentContext,
) -> tuple[CoefficientField, Grid, list[KernelSlice], EllipticityEstimate]:
    config = ctx.config
    field = build_field(config.field)
    grid = _grid(ctx, field.d)
    with ctx.timed("assemble"):
        Hop = assemble_stiffness(field, grid)
    with ctx.timed("kernels"):
        slices = list(_kernel_slices(ctx, Hop, config.analysis.t_window).values())
    scan = ellipticity_scan(field, _box(grid.L, field.d), config.analysis.samples_per_axis)
    ctx.report.results["grid"] = grid.describe()
    ctx.report.results["scan"] = scan.model_dump(by_alias=True)
    return field, grid, slices, scan


def run_envelope(ctx: ExperimentContext) -> None:
    config = ctx.config
    field, _, slices, scan = _envelope_inputs(ctx)
    window = EnvelopeWindow.from_analysis(config.analysis)
    with ctx.timed("fit"):
        envelope = fit_gaussian_envelope(slices, window)
        pair = fit_profile_envelope(slices, window)
    ctx.report.results["envelope"] = envelope.model_dump()
    ctx.report.results["profiles"] = pair.as_dict()
    ctx.report.add_check(
        "upper envelope covers every sample",
        envelope.upper_gap >= -COVERAGE_TOLERANCE,
        envelope.upper_gap,
    )
    if envelope.lower_gap is not None:
        ctx.report.add_check(
            "lower envelope covers every sample",
            envelope.lower_gap >= -COVERAGE_TOLERANCE,
            envelope.lower_gap,
        )
    if scan.strongly_elliptic:
        ctx.report.add_check(
            "strongly elliptic field has a lower envelope",
            envelope.has_lower_bound,
            detail=field.label,
        )
    ctx.writer.csv("profiles.csv", ["u", "sigma", "rho"], pair.rows())


def _conserve_one(
    ctx: ExperimentContext, field: CoefficientField, L: float, times: Sequence[float]
) -> list[dict[str, Any]]:
    """Mass defect of the bump and of the growth-adapted cutoff on the box of half-width L."""
    grid = _grid(ctx, field.d, L)
    Hop = assemble_stiffness(field, grid)
    phi = bump(grid, ctx.config.bump_radius)
    profile = _growth_profile(ctx, field, math.sqrt(field.d) * L)
    assert profile.rho is not None
    R = CUTOFF_FRACTION * float(np.interp(L, profile.s_grid, profile.rho))
    cutoff = cutoff_eta(grid, profile, R)
    rows = []
    for t in times:
        defect = mass_defect(Hop, phi, t, ctx.settings)
        kept = evolve(Hop, cutoff, t, ctx.settings).result.integral()
        rows.append(
            {
                "field": field.label,
                "L": L,
                "n": grid.n,
                "t": t,
                "defect": defect,
                "cutoff_R": R,
                "cutoff_defect": 1.0 - kept / cutoff.integral(),
            }
        )
    return rows


def run_conserve(ctx: ExperimentContext) -> None:
    config = ctx.config
    field = build_field(config.field)
    times = sorted(t for t in config.times if t > 0)
    tasks = {
        L: (lambda L=L: _conserve_one(ctx, field, L, times)) for L in config.grid.half_widths
    }
    with ctx.timed("conserve"):
        results = run_parallel(tasks, ctx.settings.threads)
    rows = [row for L in sorted(results) for row in results[L]]
    ctx.report.results["defects"] = rows
    ctx.report.add_check(
        "mass defect within [0, 1]",
        all(-1e-10 <= row["defect"] <= 1.0 for row in rows),
        max(row["defect"] for row in rows),
    )
    for L in sorted(results):
        defects = [row["defect"] for row in results[L]]
        ctx.report.add_check(
            f"mass non-increasing in t (L={L:g})",
            all(b >= a - 1e-10 for a, b in zip(defects, defects[1:], strict=False)),
        )
    ctx.writer.csv("conserve.csv", CONSERVE_COLUMNS, rows)


def run_recover(ctx: ExperimentContext) -> None:
    config = ctx.config
    analysis = config.analysis
    field, _, slices, scan = _envelope_inputs(ctx)
    window = EnvelopeWindow.from_analysis(analysis)
    with ctx.timed("recover"):
        envelope = fit_gaussian_envelope(slices, window)
        pairs = {
            "gaussian": envelope_to_profiles(envelope),
            "profile": fit_profile_envelope(slices, window),
        }
    d = field.d
    rows = []
    for name, pair in pairs.items():
        if pair.degenerate:
            ctx.report.add_check(f"{name}: lower profile positive", False, detail=field.label)
            continue
        mu = recover_mu(pair.rho, d)
        lam = recover_lambda(pair.sigma, d, analysis.a_factor)
        estimate = mu.merge(lam)
        assert estimate.mu is not None and estimate.lambda_ is not None
        assert scan.mu is not None and scan.lambda_ is not None
        forms = moment_forms(pair.rho, d)
        tol = analysis.bracket_tolerance
        ctx.report.add_check(
            f"{name}: recovered mu <= scanned mu",
            estimate.mu <= scan.mu * (1.0 + tol),
            estimate.mu,
            scan.mu,
        )
        ctx.report.add_check(
            f"{name}: recovered lambda >= scanned lambda",
            estimate.lambda_ >= scan.lambda_ * (1.0 - tol),
            estimate.lambda_,
            scan.lambda_,
        )
        ctx.report.add_check(
            f"{name}: radial and volume moment forms agree",
            forms.relative_gap <= MOMENT_FORM_RTOL,
            forms.relative_gap,
            MOMENT_FORM_RTOL,
        )
        ctx.report.results[name] = {
            "estimate": estimate.model_dump(by_alias=True),
            "profiles": pair.as_dict(),
        }
        rows.append(
            {
                "profile": name,
                "mu": estimate.mu,
                "lambda": estimate.lambda_,
                "rho_moment": pair.rho_moment,
                "rho_volume_moment": pair.rho_volume_moment,
                "sigma_moment": pair.sigma_moment,
                "sigma_volume_moment": pair.sigma_volume_moment,
            }
        )
    ctx.report.results["envelope"] = envelope.model_dump()
    ctx.writer.csv("recover.csv", RECOVER_COLUMNS, rows)
    ctx.writer.csv("profiles.csv", ["u", "sigma", "rho"], pairs["gaussian"].rows())


def run_oscillate(ctx: ExperimentContext) -> None:
    config = ctx.config
    analysis = config.analysis
    field = build_field(config.field)
    grid = _grid(ctx, field.d)
    xi = analysis.xi or [1.0] + [0.0] * (field.d - 1)
    phi = bump(grid, config.bump_radius)
    with ctx.timed("oscillation"):
        table = oscillation_extract(
            field, grid, phi, xi, analysis.k_list, max_workers=ctx.settings.threads
        )
    for row in table.rows:
        ctx.report.add_check(
            f"deviation matches k^-2 h(phi) at k={row.k:g}",
            abs(row.ratio - 1.0) <= DEVIATION_TOLERANCE,
            row.ratio,
            1.0,
        )
    error = table.extrapolation_error
    if error is not None:
        ctx.report.add_check(
            "extrapolated limit matches the quadrature",
            error <= RICHARDSON_TOLERANCE,
            error,
            RICHARDSON_TOLERANCE,
        )
    mass = float(np.sum(phi.values**2) * grid.cell_volume)
    limit = table.extrapolated if table.extrapolated is not None else table.reference
    directional = limit / mass
    scan = ellipticity_scan(field, _box(config.bump_radius, field.d), analysis.samples_per_axis)
    assert scan.mu is not None and scan.lambda_ is not None
    ctx.report.add_check(
        "directional mean within scanned [mu, lambda]",
        scan.mu * (1.0 - RICHARDSON_TOLERANCE)
        <= directional
        <= scan.lambda_ * (1.0 + RICHARDSON_TOLERANCE),
        directional,
    )
    estimate = EllipticityEstimate(
        mu=directional, lambda_=directional, provenance=Provenance.OSCILLATION
    )
    ctx.report.results["oscillation"] = table.as_dict()
    ctx.report.results["directional_estimate"] = estimate.model_dump(by_alias=True)
    ctx.writer.csv(
        "oscillation.csv",
        ["k", "h_cos", "h_sin", "scaled", "reference", "deviation", "model_deviation"],
        table.as_rows(),
    )


def run_dgcheck(ctx: ExperimentContext) -> None:
    config = ctx.config
    analysis = config.analysis
    field = build_field(config.field)
    grid = _grid(ctx, field.d)
    Hop = assemble_stiffness(field, grid)
    weight = clipped_distance_weight(Hop, analysis.psi_cap)
    settings = ctx.settings
    phi = bump(grid, config.bump_radius)
    times = [t for t in config.times if t > 0]
    tasks = {
        (tau, t): (lambda tau=tau, t=t: davies_gaffney_check(Hop, weight, phi, tau, t, settings))
        for tau in analysis.tau_list
        for t in times
    }
    with ctx.timed("davies-gaffney"):
        results = run_parallel(tasks, ctx.settings.threads)
    rows = []
    for (tau, t), check in sorted(results.items()):
        ctx.report.add_check(
            f"weighted contraction (tau={tau:g}, t={t:g})",
            check.slack >= -GAFFNEY_RTOL * check.rhs,
            check.slack,
        )
        ctx.report.add_check(
            f"integrated energy bound (tau={tau:g}, t={t:g})",
            check.integrated_slack >= -GAFFNEY_RTOL * check.integrated_bound
            - check.integrated_error,
            check.integrated_slack,
        )
        rows.append(check.as_dict())
    ctx.report.results["weight_bound"] = weight.bound
    ctx.writer.csv("dgcheck.csv", GAFFNEY_COLUMNS, rows)


def run_epsfamily(ctx: ExperimentContext) -> None:
    config = ctx.config
    field = build_field(config.field)
    grid = _grid(ctx, field.d)
    t = next((t for t in config.times if t > 0), None)
    if t is None:
        raise ConfigError("epsilon family runs need a positive time")
    phi = bump(grid, config.bump_radius)
    with ctx.timed("epsilon family"):
        family = epsilon_family_compare(
            field, grid, phi, t, config.epsilons, seed=config.seed, settings=ctx.settings
        )
    ctx.report.add_check("forms non-increasing as eps decreases", family.form_monotone)
    ctx.report.add_check(
        "consecutive distances shrink",
        family.cauchy_decreasing,
        family.distances[-1] if family.distances else None,
    )
    ctx.report.results["distances"] = family.distances
    ctx.report.results["solves"] = family.solves
    ctx.writer.csv("epsfamily.csv", ["eps_from", "eps_to", "l2_distance"], family.rows())
    form_columns = [f"eps_{i}" for i in range(len(family.epsilons))]
    ctx.writer.csv(
        "forms.csv",
        ["vector", *form_columns],
        (
            {"vector": k, **dict(zip(form_columns, values, strict=True))}
            for k, values in enumerate(family.forms)
        ),
    )


def defect_trend(defects: Sequence[float]) -> FellerStatus:
    """Read conservativeness off mass defects over increasing box sizes.

    Defects at roundoff level on every box are read as zero.
    """
    if max(abs(d) for d in defects) <= DEFECT_FLOOR:
        return FellerStatus.CONSERVATIVE
    first, last = defects[0], defects[-1]
    if last <= first / CONSERVATIVE_SHRINK:
        return FellerStatus.CONSERVATIVE
    if last >= EXPLOSIVE_FLOOR and abs(last - first) <= EXPLOSIVE_STABILITY * first:
        return FellerStatus.EXPLOSIVE
    return FellerStatus.INCONCLUSIVE


def run_dichotomy(ctx: ExperimentContext) -> None:
    config = ctx.config
    specs = config.fields or [FieldSpec(preset=name) for name in DEFAULT_DICHOTOMY_FIELDS]
    fields = [build_field(spec) for spec in specs]
    t = next((t for t in config.times if t > 0), None)
    if t is None:
        raise ConfigError("dichotomy runs need a positive time")
    half_widths = sorted(config.grid.half_widths)
    if len(half_widths) < 2:
        raise ConfigError("dichotomy runs need at least two box sizes in grid.L_list")

    tasks = {
        (i, L): (lambda f=f, L=L: _conserve_one(ctx, f, L, [t]))
        for i, f in enumerate(fields)
        for L in half_widths
    }
    with ctx.timed("mass defects"):
        results = run_parallel(tasks, ctx.settings.threads)

    rows = [row for key in sorted(results) for row in results[key]]
    summary = []
    for i, field in enumerate(fields):
        with ctx.timed(f"oracles {field.label}"):
            feller = feller_oracle_1d(field.entries[0], config.analysis.feller_cutoff)
            profile = _growth_profile(ctx, field, config.analysis.s_max)
            growth = classify_growth(ball_volume(profile))
        defects = [results[(i, L)][0]["defect"] for L in half_widths]
        trend = defect_trend(defects)
        if feller.status is not FellerStatus.INCONCLUSIVE:
            ctx.report.add_check(
                f"{field.label}: defect trend matches the Feller test",
                trend is feller.status,
                defects[-1],
                detail=f"trend {trend.value}, feller {feller.status.value}",
            )
        if growth.tikhonov is TikhonovStatus.SATISFIED:
            ctx.report.add_check(
                f"{field.label}: tikhonov growth is not explosive",
                feller.status is not FellerStatus.EXPLOSIVE,
                detail=feller.status.value,
            )
        summary.append(
            {
                "field": field.label,
                "feller": feller.status.value,
                "tikhonov": growth.tikhonov.value,
                "tacklind": growth.tacklind.value,
                "trend": trend.value,
                "defect_first": defects[0],
                "defect_last": defects[-1],
            }
        )
    ctx.report.results["summary"] = summary
    ctx.writer.csv("dichotomy.csv", CONSERVE_COLUMNS, rows)
    ctx.writer.csv(
        "dichotomy_summary.csv",
        ["field", "feller", "tikhonov", "tacklind", "trend", "defect_first", "defect_last"],
        summary,
    )


RUNNERS: dict[str, Runner] = {
    "scan": run_scan,
    "growth": run_growth,
    "kernel": run_kernel,
    "envelope": run_envelope,
    "conserve": run_conserve,
    "recover": run_recover,
    "oscillate": run_oscillate,
    "dgcheck": run_dgcheck,
    "epsfamily": run_epsfamily,
    "dichotomy": run_dichotomy,
}


def output_directory(config: ExperimentConfig, settings: Settings) -> Path:
    if config.output_dir is not None:
        return config.output_dir
    name = "benchmark" if config.kind == "dichotomy" else config.field.name
    return settings.output_dir / f"{config.kind}-{name}"


def run(config: ExperimentConfig, settings: Settings | None = None) -> RunReport:
    """Execute the configured experiment and write report.json plus its CSV payloads."""
    settings = settings or get_settings()
    out_dir = output_directory(config, settings)
    report = RunReport(
        kind=config.kind, config=config.model_dump(mode="json", exclude={"output_dir"})
    )
    ctx = ExperimentContext(config, settings, report, ReportWriter(out_dir))
    logger.info(f"running {config.kind} into {out_dir}")
    try:
        with ctx.timed("total"):
            RUNNERS[config.kind](ctx)
    except LabError as exc:
        report.results["error"] = str(exc)
        ctx.writer.finish(report)
        raise
    ctx.writer.finish(report)
    failed = [check.name for check in report.checks if not check.passed]
    if failed:
        logger.warning(f"{len(failed)} check(s) failed: {', '.join(failed)}")
    return report

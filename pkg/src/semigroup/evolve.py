"""
Action of the semigroup exp(-t A), A = H / h^d, on grid functions.

The default path is a Lanczos exponential with adaptive subspace size and
time substepping. When the Krylov error stagnates, or the step count the
spectral bound asks for exceeds the cap, the solver falls back to
trapezoidal stepping started by four backward-Euler half steps, with the
number of steps doubled until two refinements agree.
"""

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from typing import Any, NamedTuple

import numpy as np
import scipy.sparse as sp
from numpy.typing import ArrayLike, NDArray
from scipy.sparse.linalg import splu

from src.config import Settings, get_settings
from src.disc.grid import GridFunction
from src.disc.stiffness import DIRICHLET_TOLERANCE, StiffnessOperator
from src.errors import GridError, SolverError
from src.logging_config import get_logger
from src.semigroup.krylov import expm_krylov
from src.semigroup.pcg import solve_cg

logger = get_logger("semigroup.evolve")

FloatArray = NDArray[np.float64]

POSITIVITY_RTOL = 1e-8
RANNACHER_HALF_STEPS = 4
MASS_SLACK = 1e-8
DEFECT_FLOOR = -1e-10
SUPPORT_FRACTION = 1.0 / 8.0
TINY = 1e-300
DIRECT_SOLVE_LIMIT = 200_000


@dataclass(frozen=True, eq=False)
class EvolveReport:
    """Result of one evolve call with its solver diagnostics."""

    result: GridFunction
    t: float
    method: str
    substeps: int
    krylov_dim: int
    negative_excursion: float
    sup_norm: float
    residual_estimate: float
    l2_ratio: float

    def summary(self) -> dict[str, Any]:
        return {
            "t": self.t,
            "method": self.method,
            "substeps": self.substeps,
            "krylov_dim": self.krylov_dim,
            "negative_excursion": self.negative_excursion,
            "sup_norm": self.sup_norm,
            "residual_estimate": self.residual_estimate,
            "l2_ratio": self.l2_ratio,
        }


class _Outcome(NamedTuple):
    vector: FloatArray
    method: str
    substeps: int
    krylov_dim: int
    residual: float


def _norm(v: FloatArray) -> float:
    return float(np.linalg.norm(v))


def _krylov_steps(
    A: sp.csr_matrix, v: FloatArray, t: float, k: int, settings: Settings
) -> _Outcome | None:
    tau = t / k
    w = v
    total_error = 0.0
    largest = 0

    def matvec(x: FloatArray) -> FloatArray:
        return np.asarray(A @ x)

    for _ in range(k):
        m = settings.krylov_min_dim
        previous = math.inf
        while True:
            step = expm_krylov(matvec, w, tau, m)
            budget = settings.evolve_rtol * max(_norm(step.result), TINY) / k
            if step.error_estimate <= budget:
                break
            stagnated = step.error_estimate > 0.5 * previous
            if m >= settings.krylov_max_dim or stagnated:
                logger.debug(
                    f"krylov stalled at m={m}, k={k}: estimate {step.error_estimate:.3e}"
                )
                return None
            previous = step.error_estimate
            m = min(2 * m, settings.krylov_max_dim)
        w = step.result
        total_error += step.error_estimate
        largest = max(largest, step.dim)
    return _Outcome(w, "krylov", k, largest, total_error / max(_norm(w), TINY))


def _krylov(
    A: sp.csr_matrix, v: FloatArray, t: float, bound: float, settings: Settings
) -> _Outcome | None:
    k = max(1, math.ceil(t * bound / (settings.krylov_max_dim**2 / 4.0)))
    if k > settings.krylov_max_substeps:
        logger.debug(f"t*||A|| = {t * bound:.3e} needs {k} krylov substeps; going implicit")
        return None
    while k <= settings.krylov_max_substeps:
        outcome = _krylov_steps(A, v, t, k, settings)
        if outcome is not None:
            return outcome
        k *= 2
    return None


def _linear_solver(M: sp.csr_matrix, settings: Settings) -> Callable[[FloatArray], FloatArray]:
    use_cg = settings.linear_solver == "cg" or (
        settings.linear_solver == "auto" and M.shape[0] > DIRECT_SOLVE_LIMIT
    )
    if use_cg:
        return lambda b: solve_cg(M, b, settings.cg_rtol).x
    lu = splu(sp.csc_matrix(M))
    return lambda b: np.asarray(lu.solve(b))


def _trapezoidal(
    A: sp.csr_matrix, v: FloatArray, t: float, k: int, settings: Settings
) -> FloatArray:
    tau = t / k
    identity = sp.identity(A.shape[0], format="csr")
    solve = _linear_solver(sp.csr_matrix(identity + 0.5 * tau * A), settings)
    explicit = sp.csr_matrix(identity - 0.5 * tau * A)
    w = v.copy()
    done = 0
    if k >= 2:
        # backward Euler with step tau/2 shares the trapezoidal left-hand side
        for _ in range(RANNACHER_HALF_STEPS):
            w = solve(w)
        done = RANNACHER_HALF_STEPS // 2
    for _ in range(k - done):
        w = solve(explicit @ w)
    return w


def _implicit(A: sp.csr_matrix, v: FloatArray, t: float, settings: Settings) -> _Outcome:
    k = settings.implicit_min_substeps
    previous: FloatArray | None = None
    change = math.inf
    while k <= settings.implicit_max_substeps:
        w = _trapezoidal(A, v, t, k, settings)
        if previous is not None:
            change = _norm(w - previous) / max(_norm(w), TINY)
            logger.debug(f"implicit k={k}: relative change {change:.3e}")
            if change <= settings.implicit_rtol:
                return _Outcome(w, "implicit", k, 0, change)
        previous = w
        k *= 2
    raise SolverError(
        f"implicit stepping did not settle below {settings.implicit_rtol:.1e}",
        {"t": t, "max_substeps": settings.implicit_max_substeps, "last_change": change},
    )


def evolve(
    Hop: StiffnessOperator,
    v0: GridFunction,
    t: float,
    settings: Settings | None = None,
) -> EvolveReport:
    """exp(-t H / h^d) v0 for v0 vanishing on the boundary."""
    settings = settings or get_settings()
    if t < 0:
        raise SolverError(f"time must be non-negative, got {t}")
    if v0.boundary_max() > DIRICHLET_TOLERANCE:
        raise GridError("initial data must vanish on the boundary")

    v = v0.interior()
    sup0 = float(np.max(np.abs(v))) if v.size else 0.0
    if t == 0 or sup0 == 0.0:
        excursion0 = min(0.0, float(v.min(initial=0.0)))
        return EvolveReport(v0, t, "identity", 0, 0, excursion0, sup0, 0.0, 1.0)

    A = Hop.generator
    outcome = _krylov(A, v, t, Hop.generator_norm_bound(), settings)
    if outcome is None:
        logger.info(f"{Hop.label}: krylov path unavailable at t={t}, using implicit stepping")
        outcome = _implicit(A, v, t, settings)
    w = outcome.vector

    excursion = min(0.0, float(w.min()))
    pos_tol = POSITIVITY_RTOL * sup0
    if v.min() >= 0 and excursion < -pos_tol:
        m_matrix = Hop.is_m_matrix()
        diagnostics = {
            "t": t,
            "method": outcome.method,
            "excursion": excursion,
            "stencil": Hop.stencil,
            "m_matrix": m_matrix,
        }
        reason = "" if m_matrix else " (the stiffness matrix is not an M-matrix)"
        raise SolverError(
            f"{Hop.label}: negative excursion {excursion:.3e} beyond {pos_tol:.3e}{reason}",
            diagnostics,
        )

    ratio = _norm(w) / _norm(v)
    if ratio > 1.0 + 1e-12:
        logger.warning(f"{Hop.label}: L2 norm grew by {ratio - 1.0:.3e} at t={t}")
    return EvolveReport(
        result=GridFunction.from_interior(Hop.grid, w),
        t=t,
        method=outcome.method,
        substeps=outcome.substeps,
        krylov_dim=outcome.krylov_dim,
        negative_excursion=excursion,
        sup_norm=float(np.max(np.abs(w))),
        residual_estimate=outcome.residual,
        l2_ratio=ratio,
    )


@dataclass(frozen=True, eq=False)
class KernelSlice:
    """K_t(.; y) on the nodes: the evolved delta of unit mass at node y."""

    y_index: int
    y: tuple[float, ...]
    t: float
    values: GridFunction
    report: EvolveReport

    @property
    def mass(self) -> float:
        return self.values.integral()

    def distances_squared(self) -> FloatArray:
        return np.sum((self.values.grid.nodes() - np.asarray(self.y)) ** 2, axis=1)


def _source_node(Hop: StiffnessOperator, y: int | ArrayLike) -> int:
    grid = Hop.grid
    node = int(y) if isinstance(y, (int, np.integer)) else grid.nearest_node(y)
    if not 0 <= node < grid.size or not grid.interior_mask()[node]:
        raise GridError(f"kernel source {y} is not an interior node")
    return node


def extract_kernel(
    Hop: StiffnessOperator,
    y: int | ArrayLike,
    t: float,
    settings: Settings | None = None,
) -> KernelSlice:
    """Kernel column at source y (a flat node index or the point nearest to it)."""
    if not t > 0:
        raise SolverError(f"kernel time must be positive, got {t}")
    grid = Hop.grid
    node = _source_node(Hop, y)
    delta = np.zeros(grid.size)
    delta[node] = 1.0 / grid.cell_volume
    report = evolve(Hop, GridFunction(delta, grid), t, settings)

    kernel = report.result
    mass = kernel.integral()
    if mass > 1.0 + MASS_SLACK:
        raise SolverError(
            f"{Hop.label}: kernel mass {mass:.12f} exceeds 1",
            {"t": t, "y": node, "mass": mass},
        )
    point = tuple(float(c) for c in grid.nodes()[node])
    logger.debug(f"{Hop.label}: kernel at y={point}, t={t}: mass {mass:.10f}")
    return KernelSlice(node, point, t, kernel, report)


def mass_defect(
    Hop: StiffnessOperator,
    v0: GridFunction,
    t: float,
    settings: Settings | None = None,
) -> float:
    """1 - sum(S_t v0) / sum(v0) for non-negative v0 supported in the inner eighth of the box."""
    grid = Hop.grid
    if np.any(v0.values < 0):
        raise GridError("mass defect needs non-negative initial data")
    support = v0.values != 0
    if not support.any():
        raise GridError("initial data is identically zero")
    reach = np.max(np.linalg.norm(grid.nodes()[support] - np.asarray(grid.center), axis=1))
    if reach > SUPPORT_FRACTION * grid.L + 1e-12:
        raise GridError(
            f"initial data reaches |x|={reach:.4g}, beyond L/8={SUPPORT_FRACTION * grid.L:.4g}"
        )
    report = evolve(Hop, v0, t, settings)
    defect = 1.0 - float(np.sum(report.result.values)) / float(np.sum(v0.values))
    return max(defect, DEFECT_FLOOR)


class SymmetryDefect(NamedTuple):
    worst: float
    pairs: list[tuple[int, int, float]]


def kernel_symmetry_defect(
    Hop: StiffnessOperator,
    t: float,
    pairs: Sequence[tuple[int, int]],
    settings: Settings | None = None,
) -> SymmetryDefect:
    """Relative |K_t(x;y) - K_t(y;x)| over node pairs.

    Values below 1e-8 of the column peak are compared absolutely.
    """
    columns: dict[int, KernelSlice] = {}

    def column(node: int) -> KernelSlice:
        if node not in columns:
            columns[node] = extract_kernel(Hop, node, t, settings)
        return columns[node]

    results = []
    for x, y in pairs:
        forward = column(y).values.values[x]
        backward = column(x).values.values[y]
        peak = max(column(x).report.sup_norm, column(y).report.sup_norm)
        scale = max(abs(forward), abs(backward), 1e-8 * peak, TINY)
        results.append((int(x), int(y), abs(forward - backward) / scale))
    worst = max((r[2] for r in results), default=0.0)
    return SymmetryDefect(worst, results)


class GroundState(NamedTuple):
    eigenvalue: float
    vector: GridFunction
    iterations: int


def ground_state(
    Hop: StiffnessOperator,
    rtol: float = 1e-12,
    max_iter: int = 500,
) -> GroundState:
    """Smallest eigenpair of the generator by inverse iteration with a Rayleigh-quotient check."""
    A = Hop.generator
    n = A.shape[0]
    shift = 1e-12 * Hop.generator_norm_bound()
    lu = splu(sp.csc_matrix(A + shift * sp.identity(n)))
    v = np.ones(n) / math.sqrt(n)
    eigenvalue = float(v @ (A @ v))
    for iteration in range(1, max_iter + 1):
        w = lu.solve(v)
        v = w / _norm(w)
        updated = float(v @ (A @ v))
        residual = _norm(A @ v - updated * v)
        if abs(updated - eigenvalue) <= rtol * abs(updated) and residual <= 1e-8 * abs(updated):
            eigenvalue = updated
            break
        eigenvalue = updated
    else:
        raise SolverError(
            f"inverse iteration did not converge in {max_iter} steps",
            {"eigenvalue": eigenvalue},
        )
    if v.sum() < 0:
        v = -v
    logger.debug(f"{Hop.label}: ground state {eigenvalue:.12g} after {iteration} iterations")
    return GroundState(eigenvalue, GridFunction.from_interior(Hop.grid, v), iteration)

"""Regularized family C + eps I: convergence of S_t^(eps) and monotonicity of the forms."""

import concurrent.futures
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from src.coeff.field import CoefficientField
from src.config import Settings, get_settings
from src.disc.grid import Grid, GridFunction
from src.disc.stiffness import StiffnessOperator, assemble_stiffness
from src.errors import SolverError
from src.logging_config import get_logger
from src.semigroup.evolve import EvolveReport, evolve

logger = get_logger("semigroup.epsilon")

FORM_RTOL = 1e-12


@dataclass
class EpsilonFamilyReport:
    epsilons: list[float]
    results: list[GridFunction]
    distances: list[float] = field(default_factory=list)
    forms: list[list[float]] = field(default_factory=list)
    form_monotone: bool = True
    cauchy_decreasing: bool = True
    solves: list[dict[str, Any]] = field(default_factory=list)

    def rows(self) -> list[dict[str, float]]:
        """One row per consecutive pair (eps_i, eps_{i+1})."""
        return [
            {"eps_from": a, "eps_to": b, "l2_distance": dist}
            for a, b, dist in zip(self.epsilons, self.epsilons[1:], self.distances, strict=False)
        ]


def _solve(
    field_: CoefficientField,
    grid: Grid,
    v0: GridFunction,
    t: float,
    eps: float,
    settings: Settings,
) -> tuple[StiffnessOperator, EvolveReport]:
    Hop = assemble_stiffness(field_, grid, eps)
    return Hop, evolve(Hop, GridFunction(v0.values, grid), t, settings)


def epsilon_family_compare(
    field_: CoefficientField,
    grid: Grid,
    v0: GridFunction,
    t: float,
    eps_list: Sequence[float],
    seed: int = 0,
    vectors: int = 5,
    settings: Settings | None = None,
) -> EpsilonFamilyReport:
    """Evolve under H_eps for each eps (strictly decreasing) and compare consecutive results."""
    settings = settings or get_settings()
    eps = [float(e) for e in eps_list]
    if len(eps) < 2:
        raise SolverError("need at least two epsilon values")
    if any(b >= a for a, b in zip(eps, eps[1:], strict=False)) or eps[-1] < 0:
        raise SolverError(f"epsilons must decrease strictly to a non-negative minimum: {eps}")

    solved: dict[int, tuple[StiffnessOperator, EvolveReport]] = {}
    with concurrent.futures.ThreadPoolExecutor(max_workers=settings.threads) as executor:
        future_to_index = {
            executor.submit(_solve, field_, grid, v0, t, e, settings): i
            for i, e in enumerate(eps)
        }
        for future in concurrent.futures.as_completed(future_to_index):
            solved[future_to_index[future]] = future.result()

    operators = [solved[i][0] for i in range(len(eps))]
    results = [solved[i][1].result for i in range(len(eps))]
    distances = [
        GridFunction(a.values - b.values, grid).l2_norm()
        for a, b in zip(results, results[1:], strict=False)
    ]

    rng = np.random.default_rng(seed)
    forms: list[list[float]] = []
    monotone = True
    for _ in range(vectors):
        v = rng.standard_normal(operators[0].size)
        values = [float(v @ (Hop.matrix @ v)) for Hop in operators]
        forms.append(values)
        for a, b in zip(values, values[1:], strict=False):
            if b > a + FORM_RTOL * abs(a):
                monotone = False

    decreasing = all(b < a for a, b in zip(distances, distances[1:], strict=False))
    logger.info(
        f"{field_.label}: eps family {eps} distances "
        + ", ".join(f"{dist:.3e}" for dist in distances)
    )
    return EpsilonFamilyReport(
        epsilons=eps,
        results=results,
        distances=distances,
        forms=forms,
        form_monotone=monotone,
        cauchy_decreasing=decreasing,
        solves=[solved[i][1].summary() for i in range(len(eps))],
    )

"""
Directional ellipticity from oscillating test functions.

For phi_c = cos(k x.xi) phi and phi_s = sin(k x.xi) phi the cross terms
cancel and k^-2 (h(phi_c) + h(phi_s)) = int (xi, C xi) |phi|^2 + k^-2 h(phi).
The table records the computed left side next to both terms of the right.
"""

import concurrent.futures
import math
from collections.abc import Sequence
from dataclasses import dataclass
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray

from src.coeff.field import CoefficientField
from src.disc.grid import Grid, GridFunction
from src.disc.stiffness import StiffnessOperator, assemble_stiffness, quadratic_form
from src.errors import FieldError, GridError
from src.logging_config import get_logger

logger = get_logger("analysis.oscillation")

RESOLUTION_FACTOR = 8.0
UNIT_TOLERANCE = 1e-12


@dataclass(frozen=True)
class OscillationRow:
    k: float
    h_cos: float
    h_sin: float
    scaled: float
    deviation: float
    model_deviation: float

    @property
    def ratio(self) -> float:
        """deviation / k^-2 h(phi); 1 in the continuum."""
        return self.deviation / self.model_deviation if self.model_deviation else math.nan


@dataclass(frozen=True)
class OscillationTable:
    xi: tuple[float, ...]
    reference: float
    h_phi: float
    rows: list[OscillationRow]
    extrapolated: float | None

    @property
    def extrapolation_error(self) -> float | None:
        if self.extrapolated is None or self.reference == 0:
            return None
        return abs(self.extrapolated - self.reference) / abs(self.reference)

    def as_rows(self) -> list[dict[str, float]]:
        return [
            {
                "k": row.k,
                "h_cos": row.h_cos,
                "h_sin": row.h_sin,
                "scaled": row.scaled,
                "reference": self.reference,
                "deviation": row.deviation,
                "model_deviation": row.model_deviation,
            }
            for row in self.rows
        ]

    def as_dict(self) -> dict[str, Any]:
        return {
            "xi": list(self.xi),
            "reference": self.reference,
            "h_phi": self.h_phi,
            "extrapolated": self.extrapolated,
            "extrapolation_error": self.extrapolation_error,
        }


def _unit(xi: ArrayLike, d: int) -> NDArray[np.float64]:
    direction = np.asarray(xi, dtype=np.float64).reshape(-1)
    if direction.size != d:
        raise FieldError(f"direction has {direction.size} components, grid has d={d}")
    if abs(float(np.linalg.norm(direction)) - 1.0) > UNIT_TOLERANCE:
        raise FieldError(f"direction {direction.tolist()} is not a unit vector")
    return direction


def _check_support(grid: Grid, phi: GridFunction) -> None:
    outer = grid.distance_to_boundary(grid.nodes()) < 0.5 * grid.L
    if np.any(phi.values[outer] != 0.0):
        raise GridError("test function must be supported in the inner half of the box")


def directional_reference(field: CoefficientField, phi: GridFunction, xi: ArrayLike) -> float:
    """int (xi, C(x) xi) |phi(x)|^2 dx by the node rule."""
    grid = phi.grid
    direction = _unit(xi, grid.d)
    C = field.matrices(grid.nodes())
    weight = np.einsum("i,mij,j->m", direction, C, direction)
    return float(np.sum(weight * phi.values**2) * grid.cell_volume)


def richardson_limit(k: Sequence[float], values: Sequence[float]) -> float | None:
    """Intercept of the least-squares line through (k^-2, value)."""
    if len(k) < 2:
        return None
    x = np.asarray(k, dtype=np.float64) ** -2
    _, intercept = np.polyfit(x, np.asarray(values, dtype=np.float64), 1)
    return float(intercept)


def oscillation_extract(
    field: CoefficientField,
    grid: Grid,
    phi: GridFunction,
    xi: ArrayLike,
    k_list: Sequence[float],
    Hop: StiffnessOperator | None = None,
    max_workers: int | None = None,
) -> OscillationTable:
    """Tabulate k^-2 (h(phi_c) + h(phi_s)) against the direct quadrature of the limit."""
    if phi.grid is not grid:
        raise GridError("test function lives on a different grid")
    direction = _unit(xi, grid.d)
    if not k_list:
        raise GridError("no wave numbers given")
    k_cap = math.pi / (RESOLUTION_FACTOR * grid.h)
    if max(k_list) > k_cap:
        raise GridError(f"k={max(k_list)} exceeds the resolution limit pi/(8h)={k_cap:.4g}")
    _check_support(grid, phi)

    Hop = Hop or assemble_stiffness(field, grid)
    phase = grid.nodes() @ direction
    reference = directional_reference(field, phi, direction)
    h_phi = quadratic_form(Hop, phi)

    def row(k: float) -> OscillationRow:
        h_cos = quadratic_form(Hop, GridFunction(np.cos(k * phase) * phi.values, grid))
        h_sin = quadratic_form(Hop, GridFunction(np.sin(k * phase) * phi.values, grid))
        scaled = (h_cos + h_sin) / k**2
        return OscillationRow(
            k=float(k),
            h_cos=h_cos,
            h_sin=h_sin,
            scaled=scaled,
            deviation=scaled - reference,
            model_deviation=h_phi / k**2,
        )

    results: dict[int, OscillationRow] = {}
    with concurrent.futures.ThreadPoolExecutor(max_workers=max_workers) as executor:
        future_to_index = {executor.submit(row, float(k)): i for i, k in enumerate(k_list)}
        for future in concurrent.futures.as_completed(future_to_index):
            results[future_to_index[future]] = future.result()
    rows = [results[i] for i in range(len(k_list))]

    table = OscillationTable(
        xi=tuple(float(x) for x in direction),
        reference=reference,
        h_phi=h_phi,
        rows=rows,
        extrapolated=richardson_limit([r.k for r in rows], [r.scaled for r in rows]),
    )
    for r in rows:
        logger.debug(f"k={r.k:g}: deviation {r.deviation:.6e} vs model {r.model_deviation:.6e}")
    return table

"""
Assembly of the divergence-form stiffness matrix.

Each cell contributes d forward differences taken from its lower corner.
With G_i the i-th difference matrix and M_ij the diagonal of
(c_ij(x_mid) + eps delta_ij) h^d, the factored form matrix is

    H = sum_ij G_i^T M_ij G_j

restricted to interior nodes (Dirichlet). v.Hv is the cell quadrature of
grad(v).C grad(v), so H is symmetric positive semidefinite by construction.
The semigroup generator is H / h^d.

When C has off-diagonal entries and is diagonally dominant on every cell,
the directional stencil is used instead: C is split as

    C = sum_i w_i e_i e_i^T + sum_{i<j} w_ij^+- (e_i +- e_j)(e_i +- e_j)^T

with non-negative weights, and each term becomes a weighted difference
along an edge or a face diagonal of the cell. Every term is a graph
Laplacian, so H is an M-matrix and exp(-tA) preserves positivity.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from numpy.typing import NDArray

from src.coeff.field import CoefficientField, check_psd
from src.disc.grid import CellFunction, Grid, GridFunction
from src.errors import GridError
from src.logging_config import get_logger

logger = get_logger("disc.stiffness")

FloatArray = NDArray[np.float64]

DIRICHLET_TOLERANCE = 1e-14
DOMINANCE_RTOL = 1e-12


def _difference_1d(n: int, h: float) -> sp.csr_matrix:
    """(n-1) x n forward difference."""
    ones = np.ones(n - 1)
    return sp.diags([-ones / h, ones / h], [0, 1], shape=(n - 1, n), format="csr")


def _lower_node_1d(n: int) -> sp.csr_matrix:
    """(n-1) x n selection of each cell's lower node."""
    return sp.eye(n - 1, n, format="csr")


def gradient_matrices(grid: Grid) -> list[sp.csr_matrix]:
    """G_i mapping node values to the i-th difference per cell, (n-1)^d x n^d each."""
    diff = _difference_1d(grid.n, grid.h)
    lower = _lower_node_1d(grid.n)
    gradients = []
    for i in range(grid.d):
        factors = [diff if k == i else lower for k in range(grid.d)]
        G = factors[0]
        for factor in factors[1:]:
            G = sp.kron(G, factor, format="csr")
        gradients.append(sp.csr_matrix(G))
    return gradients


def _corner_selection(grid: Grid, offset: tuple[int, ...]) -> sp.csr_matrix:
    """(n-1)^d x n^d selection of the node at each cell's lower corner plus offset."""
    lower = _lower_node_1d(grid.n)
    upper = sp.eye(grid.n - 1, grid.n, k=1, format="csr")
    S = upper if offset[0] else lower
    for k in offset[1:]:
        S = sp.kron(S, upper if k else lower, format="csr")
    return sp.csr_matrix(S)


@dataclass(frozen=True, eq=False)
class Direction:
    """One term w (D v)^2 of the directional stencil, w per cell without h^d."""

    name: str
    difference: sp.csr_matrix
    weights: FloatArray


def directional_stencil(grid: Grid, coefficients: FloatArray) -> tuple[Direction, ...] | None:
    """Edge and face-diagonal terms of C, or None if C is not diagonally dominant."""
    d = grid.d
    off = np.abs(coefficients) * (1.0 - np.eye(d))[None, :, :]
    axis_weights = np.einsum("mii->mi", coefficients) - off.sum(axis=2)
    if axis_weights.min() < -DOMINANCE_RTOL * float(np.abs(coefficients).max()):
        return None
    axis_weights = np.maximum(axis_weights, 0.0)

    gradients = gradient_matrices(grid)
    terms = [Direction(f"e{i + 1}", gradients[i], axis_weights[:, i]) for i in range(d)]
    zero = (0,) * d
    for i in range(d):
        for j in range(i + 1, d):
            c = coefficients[:, i, j]
            unit_i = tuple(int(k == i) for k in range(d))
            unit_j = tuple(int(k == j) for k in range(d))
            both = tuple(a + b for a, b in zip(unit_i, unit_j, strict=True))
            if np.any(c > 0):
                D = (_corner_selection(grid, both) - _corner_selection(grid, zero)) / grid.h
                terms.append(
                    Direction(f"e{i + 1}+e{j + 1}", sp.csr_matrix(D), np.maximum(c, 0.0))
                )
            if np.any(c < 0):
                D = (_corner_selection(grid, unit_i) - _corner_selection(grid, unit_j)) / grid.h
                terms.append(
                    Direction(f"e{i + 1}-e{j + 1}", sp.csr_matrix(D), np.maximum(-c, 0.0))
                )
    return tuple(terms)


@dataclass(frozen=True, eq=False)
class StiffnessOperator:
    """Symmetric PSD form matrix over interior nodes, with the data that built it."""

    matrix: sp.csr_matrix
    grid: Grid
    label: str
    epsilon: float
    cell_coefficients: FloatArray
    gradients: tuple[sp.csr_matrix, ...]
    directions: tuple[Direction, ...] = ()

    @property
    def stencil(self) -> str:
        return "directional" if self.directions else "factored"

    @property
    def size(self) -> int:
        return int(self.matrix.shape[0])

    @property
    def interior(self) -> NDArray[np.intp]:
        return self.grid.interior_indices()

    @property
    def generator(self) -> sp.csr_matrix:
        """H / h^d, the matrix whose exponential is the semigroup on node values."""
        return sp.csr_matrix(self.matrix / self.grid.cell_volume)

    def generator_norm_bound(self) -> float:
        """Gershgorin bound on the spectral radius of the generator."""
        return float(abs(self.generator).sum(axis=1).max())

    def is_m_matrix(self) -> bool:
        """Non-positive off-diagonal entries, which makes e^{-tH} entrywise positive."""
        off = sp.triu(self.matrix, k=1)
        return bool(off.nnz == 0 or off.data.max() <= 1e-14 * abs(self.matrix.diagonal()).max())

    def to_coo_text(self) -> str:
        """Coordinate list "row,col,value" over interior indices, sorted."""
        coo = self.matrix.tocoo()
        order = np.lexsort((coo.col, coo.row))
        lines = ["row,col,value"]
        lines += [f"{coo.row[k]},{coo.col[k]},{float(coo.data[k])!r}" for k in order]
        return "\n".join(lines) + "\n"

    def export_coo(self, path: Path) -> Path:
        path.write_text(self.to_coo_text(), encoding="utf-8", newline="\n")
        return path


def assemble_stiffness(
    field: CoefficientField,
    grid: Grid,
    epsilon: float = 0.0,
) -> StiffnessOperator:
    """Assemble H for C + eps I with Dirichlet boundary on the grid."""
    if field.d != grid.d:
        raise GridError(f"field has d={field.d}, grid has d={grid.d}")
    if epsilon < 0:
        raise GridError(f"epsilon must be non-negative, got {epsilon}")

    midpoints = grid.cell_midpoints()
    coefficients = field.matrices(midpoints)
    check_psd(field, midpoints, coefficients)
    weights = coefficients + epsilon * np.eye(grid.d)[None, :, :]
    weights *= grid.cell_volume

    interior = grid.interior_indices()
    full = gradient_matrices(grid)
    restricted = [sp.csr_matrix(G[:, interior]) for G in full]

    directions: tuple[Direction, ...] = ()
    if grid.d > 1 and np.any(coefficients * (1.0 - np.eye(grid.d))[None, :, :]):
        directions = directional_stencil(grid, coefficients) or ()
        if not directions:
            logger.warning(
                f"{field.label}: C is not diagonally dominant on every cell, the factored "
                "stencil need not preserve positivity"
            )

    H = sp.csr_matrix((interior.size, interior.size))
    if directions:
        for term in directions:
            R = sp.csr_matrix(term.difference[:, interior])
            H = H + R.T @ sp.diags(term.weights * grid.cell_volume) @ R
        if epsilon:
            for G in restricted:
                H = H + (epsilon * grid.cell_volume) * (G.T @ G)
    else:
        for i in range(grid.d):
            for j in range(grid.d):
                if not np.any(weights[:, i, j]):
                    continue
                H = H + restricted[i].T @ sp.diags(weights[:, i, j]) @ restricted[j]
    H = sp.csr_matrix(0.5 * (H + H.T))
    H.sum_duplicates()
    H.sort_indices()

    logger.debug(
        f"{field.label}: assembled {H.shape[0]}x{H.shape[1]} stiffness, "
        f"nnz={H.nnz}, eps={epsilon}, {'directional' if directions else 'factored'} stencil"
    )
    return StiffnessOperator(
        matrix=H,
        grid=grid,
        label=field.label,
        epsilon=float(epsilon),
        cell_coefficients=coefficients,
        gradients=tuple(full),
        directions=directions,
    )


def _check_grid(Hop: StiffnessOperator, phi: GridFunction) -> None:
    g, o = phi.grid, Hop.grid
    if (g.d, g.L, g.n, g.center) != (o.d, o.L, o.n, o.center):
        raise GridError("grid function and operator live on different grids")


def _check_dirichlet(phi: GridFunction) -> None:
    boundary = phi.boundary_max()
    if boundary > DIRICHLET_TOLERANCE:
        raise GridError(f"function is not zero on the boundary (max |value| {boundary:.3e})")


def quadratic_form(Hop: StiffnessOperator, phi: GridFunction) -> float:
    """v.Hv for a function vanishing on the boundary."""
    _check_grid(Hop, phi)
    _check_dirichlet(phi)
    v = phi.interior()
    return float(v @ (Hop.matrix @ v))


def cell_gradients(Hop: StiffnessOperator, phi: GridFunction) -> FloatArray:
    """Forward-difference gradient per cell, shape ((n-1)^d, d)."""
    _check_grid(Hop, phi)
    return np.stack([G @ phi.values for G in Hop.gradients], axis=1)


def carre_du_champ(
    source: CoefficientField | StiffnessOperator,
    phi: GridFunction,
    epsilon: float | None = None,
    dirichlet: bool = True,
) -> CellFunction:
    """Per-cell grad(phi).C grad(phi) + eps |grad(phi)|^2, C taken at cell midpoints.

    An operator supplies its stored midpoint coefficients and, by default, its eps.
    On a directional operator the density is the sum of its weighted squared
    differences, so it still integrates to the form.
    """
    if dirichlet:
        _check_dirichlet(phi)
    if isinstance(source, StiffnessOperator):
        eps = source.epsilon if epsilon is None else epsilon
        grad = cell_gradients(source, phi)
        if source.directions:
            gamma = np.sum(
                [t.weights * (t.difference @ phi.values) ** 2 for t in source.directions], axis=0
            )
            gamma += eps * np.sum(grad**2, axis=1)
            return CellFunction(gamma, phi.grid)
        coefficients = source.cell_coefficients
    else:
        if source.d != phi.grid.d:
            raise GridError(f"field has d={source.d}, grid has d={phi.grid.d}")
        eps = epsilon or 0.0
        grad = np.stack([G @ phi.values for G in gradient_matrices(phi.grid)], axis=1)
        coefficients = source.matrices(phi.grid.cell_midpoints())
    gamma = np.einsum("mi,mij,mj->m", grad, coefficients, grad)
    gamma += eps * np.sum(grad**2, axis=1)
    return CellFunction(gamma, phi.grid)

"""Uniform box grids [-L, L]^d and functions sampled on them."""

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray

from src.coeff.expr import MAX_DIMENSION, ScalarFieldExpr
from src.config import get_settings
from src.errors import GridError
from src.logging_config import get_logger

logger = get_logger("disc.grid")

FloatArray = NDArray[np.float64]
IndexArray = NDArray[np.intp]


@dataclass(frozen=True, eq=False)
class Grid:
    """Node lattice of the box center + [-L, L]^d with n nodes per axis, C-ordered."""

    d: int
    L: float
    n: int
    center: tuple[float, ...] = field(default=())

    def __post_init__(self) -> None:
        if not 1 <= self.d <= MAX_DIMENSION:
            raise GridError(f"dimension must be in 1..{MAX_DIMENSION}, got {self.d}")
        if self.n < 3:
            raise GridError(f"need at least 3 nodes per axis, got {self.n}")
        if not self.L > 0:
            raise GridError(f"half-width must be positive, got {self.L}")
        if not self.center:
            object.__setattr__(self, "center", (0.0,) * self.d)
        if len(self.center) != self.d:
            raise GridError(f"center has {len(self.center)} coordinates, grid has d={self.d}")

    @property
    def h(self) -> float:
        return 2.0 * self.L / (self.n - 1)

    @property
    def cell_volume(self) -> float:
        return self.h**self.d

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.d

    @property
    def cell_shape(self) -> tuple[int, ...]:
        return (self.n - 1,) * self.d

    @property
    def size(self) -> int:
        return self.n**self.d

    def axis(self, k: int) -> FloatArray:
        return self.center[k] + np.linspace(-self.L, self.L, self.n)

    def nodes(self) -> FloatArray:
        """Coordinates of every node, shape (n^d, d)."""
        mesh = np.meshgrid(*(self.axis(k) for k in range(self.d)), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def cell_midpoints(self) -> FloatArray:
        """Cell centers, shape ((n-1)^d, d), C-ordered like the nodes."""
        mids = [0.5 * (a[:-1] + a[1:]) for a in (self.axis(k) for k in range(self.d))]
        mesh = np.meshgrid(*mids, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def interior_mask(self) -> NDArray[np.bool_]:
        inner = np.zeros(self.n, dtype=bool)
        inner[1:-1] = True
        mask = inner
        for _ in range(self.d - 1):
            mask = np.logical_and.outer(mask, inner)
        return mask.ravel()

    def interior_indices(self) -> IndexArray:
        return np.flatnonzero(self.interior_mask())

    def flat_index(self, multi: ArrayLike) -> IndexArray:
        """Multi-indices, shape (m, d) or (d,), to flat indices."""
        arr = np.atleast_2d(np.asarray(multi, dtype=np.intp))
        return np.asarray(np.ravel_multi_index(tuple(arr.T), self.shape), dtype=np.intp)

    def multi_index(self, flat: ArrayLike) -> IndexArray:
        """Flat indices to multi-indices of shape (m, d)."""
        return np.stack(np.unravel_index(np.atleast_1d(flat), self.shape), axis=1)

    def nearest_node(self, point: ArrayLike) -> int:
        x = np.asarray(point, dtype=np.float64).reshape(self.d)
        k = np.rint((x - np.asarray(self.center) + self.L) / self.h).astype(np.intp)
        return int(self.flat_index(np.clip(k, 0, self.n - 1))[0])

    def distance_to_boundary(self, points: ArrayLike) -> FloatArray:
        pts = np.asarray(points, dtype=np.float64).reshape(-1, self.d)
        return self.L - np.max(np.abs(pts - np.asarray(self.center)), axis=1)

    def describe(self) -> dict[str, float | int]:
        return {"d": self.d, "L": self.L, "n": self.n, "h": self.h}


def build_grid(
    d: int,
    L: float,
    n: int,
    center: tuple[float, ...] | None = None,
    max_nodes: int | None = None,
) -> Grid:
    """Grid over center + [-L, L]^d, refusing sizes above the configured node cap."""
    cap = max_nodes if max_nodes is not None else get_settings().max_grid_nodes
    if n >= 3 and n**d > cap:
        raise GridError(f"grid with {n}^{d} = {n**d} nodes exceeds the cap of {cap}")
    grid = Grid(d=d, L=float(L), n=n, center=tuple(center) if center else ())
    logger.debug(f"grid d={d} L={L} n={n} h={grid.h:.6g}")
    return grid


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Values on every node of a grid, boundary included."""

    values: FloatArray
    grid: Grid

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64).ravel()
        if values.size != self.grid.size:
            raise GridError(f"expected {self.grid.size} node values, got {values.size}")
        if not np.all(np.isfinite(values)):
            raise GridError("grid function has non-finite entries")
        object.__setattr__(self, "values", values)

    @classmethod
    def from_interior(cls, grid: Grid, interior: ArrayLike) -> "GridFunction":
        """Embed interior values, zero on the boundary."""
        values = np.zeros(grid.size)
        values[grid.interior_indices()] = np.asarray(interior, dtype=np.float64)
        return cls(values, grid)

    def interior(self) -> FloatArray:
        return self.values[self.grid.interior_indices()]

    def boundary_max(self) -> float:
        boundary = self.values[~self.grid.interior_mask()]
        return float(np.max(np.abs(boundary))) if boundary.size else 0.0

    def integral(self) -> float:
        return float(np.sum(self.values) * self.grid.cell_volume)

    def l2_norm(self) -> float:
        return float(np.sqrt(np.sum(self.values**2) * self.grid.cell_volume))

    def as_array(self) -> FloatArray:
        return self.values.reshape(self.grid.shape)

    def __mul__(self, other: "GridFunction | float") -> "GridFunction":
        factor = other.values if isinstance(other, GridFunction) else other
        return GridFunction(self.values * factor, self.grid)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class CellFunction:
    """Values per cell, C-ordered like Grid.cell_midpoints()."""

    values: FloatArray
    grid: Grid

    def integral(self) -> float:
        return float(np.sum(self.values) * self.grid.cell_volume)

    def max(self) -> float:
        return float(np.max(self.values))


def sample_function(grid: Grid, expr: ScalarFieldExpr) -> GridFunction:
    """Evaluate an expression at every node; evaluation errors carry the node location."""
    if expr.d != grid.d:
        raise GridError(f"expression over d={expr.d} sampled on a d={grid.d} grid")
    return GridFunction(expr(grid.nodes()), grid)


def bump(
    grid: Grid,
    radius: float,
    center: tuple[float, ...] | None = None,
    power: int = 4,
) -> GridFunction:
    """max(0, 1 - |x - c|^2 / r^2)^power, C^(power-1) with support in the ball of radius r."""
    c = np.zeros(grid.d) if center is None else np.asarray(center, dtype=np.float64)
    r2 = np.sum((grid.nodes() - c) ** 2, axis=1) / radius**2
    return GridFunction(np.maximum(0.0, 1.0 - r2) ** power, grid)

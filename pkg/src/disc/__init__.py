"""Box grids, factored stiffness assembly, carre du champ and growth-adapted cutoffs."""

from .cutoff import cutoff_eta
from .grid import CellFunction, Grid, GridFunction, build_grid, bump, sample_function
from .stiffness import StiffnessOperator, assemble_stiffness, carre_du_champ, quadratic_form

__all__ = [
    "CellFunction",
    "Grid",
    "GridFunction",
    "StiffnessOperator",
    "assemble_stiffness",
    "build_grid",
    "bump",
    "carre_du_champ",
    "cutoff_eta",
    "quadratic_form",
    "sample_function",
]

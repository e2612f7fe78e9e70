"""Jacobi-preconditioned conjugate gradients for the implicit time steps."""

from typing import NamedTuple

import numpy as np
import scipy.sparse as sp
from numpy.typing import NDArray

from src.errors import SolverError
from src.logging_config import get_logger

logger = get_logger("semigroup.pcg")

FloatArray = NDArray[np.float64]


class CGResult(NamedTuple):
    x: FloatArray
    iterations: int
    residual: float


def solve_cg(
    A: sp.spmatrix,
    b: FloatArray,
    rtol: float,
    max_iter: int | None = None,
    x0: FloatArray | None = None,
) -> CGResult:
    """Solve A x = b for symmetric positive definite A until ||r|| <= rtol ||b||."""
    diagonal = A.diagonal()
    if np.any(diagonal <= 0):
        raise SolverError("Jacobi preconditioner needs a positive diagonal")
    inverse_diagonal = 1.0 / diagonal
    max_iter = max_iter or 10 * b.size

    x = np.zeros_like(b) if x0 is None else x0.copy()
    norm_b = float(np.linalg.norm(b))
    if norm_b == 0.0:
        return CGResult(np.zeros_like(b), 0, 0.0)

    r = b - A @ x
    z = inverse_diagonal * r
    p = z.copy()
    rz = float(r @ z)
    residual = float(np.linalg.norm(r))
    for iteration in range(1, max_iter + 1):
        Ap = A @ p
        step = rz / float(p @ Ap)
        x += step * p
        r -= step * Ap
        residual = float(np.linalg.norm(r))
        if residual <= rtol * norm_b:
            return CGResult(x, iteration, residual / norm_b)
        z = inverse_diagonal * r
        rz_next = float(r @ z)
        p = z + (rz_next / rz) * p
        rz = rz_next

    raise SolverError(
        f"CG did not reach rtol={rtol:.1e} in {max_iter} iterations",
        {"iterations": max_iter, "relative_residual": residual / norm_b},
    )

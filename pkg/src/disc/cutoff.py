"""Cutoffs eta_R(x) = eta(rho(|x|) / R) adapted to the coefficient growth."""

import numpy as np
from numpy.typing import NDArray

from src.coeff.growth import GrowthProfile, rho_distance
from src.disc.grid import Grid, GridFunction
from src.errors import GridError
from src.logging_config import get_logger

logger = get_logger("disc.cutoff")


def eta(s: NDArray[np.float64]) -> NDArray[np.float64]:
    """1 on [0, 1), 0 on [2, inf), cubic smoothstep between; |eta'| <= 3/2."""
    u = np.clip(np.asarray(s, dtype=np.float64) - 1.0, 0.0, 1.0)
    return 1.0 - 3.0 * u**2 + 2.0 * u**3


def cutoff_eta(grid: Grid, profile: GrowthProfile, R: float) -> GridFunction:
    """eta_R on the grid nodes, with rho(|x|) interpolated from the profile."""
    if not R > 0:
        raise GridError(f"cutoff radius must be positive, got {R}")
    if profile.rho is None:
        profile = rho_distance(profile)
    assert profile.rho is not None

    radii = np.linalg.norm(grid.nodes(), axis=1)
    if radii.max() > profile.s_grid[-1] * (1.0 + 1e-12):
        raise GridError(
            f"profile covers |x| <= {profile.s_grid[-1]:.6g}, grid reaches {radii.max():.6g}"
        )
    rho = np.interp(radii, profile.s_grid, profile.rho)
    values = eta(rho / R)
    logger.debug(f"eta_R with R={R}: {np.count_nonzero(values > 0)} nodes in the support")
    return GridFunction(values, grid)

"""Davies-Gaffney weighted estimates for the semigroup."""

import math
from dataclasses import dataclass
from typing import Any

import numpy as np
import scipy.sparse as sp
from numpy.typing import NDArray
from scipy.integrate import trapezoid

from src.config import Settings
from src.disc.grid import Grid, GridFunction
from src.disc.stiffness import StiffnessOperator, carre_du_champ
from src.errors import FieldError
from src.logging_config import get_logger
from src.semigroup.evolve import evolve

logger = get_logger("semigroup.gaffney")

FloatArray = NDArray[np.float64]

CERTIFICATE_SLACK = 1e-10
TIME_PANELS = 32


@dataclass(frozen=True, eq=False)
class LipschitzWeight:
    """A weight psi with a certified bound on max Gamma(psi) over the cells."""

    psi: GridFunction
    bound: float

    @classmethod
    def certify(cls, Hop: StiffnessOperator, psi: GridFunction) -> "LipschitzWeight":
        """Certify Gamma_eps(psi) <= 1 under the operator's coefficients."""
        bound = carre_du_champ(Hop, psi, dirichlet=False).max()
        if bound > 1.0 + CERTIFICATE_SLACK:
            raise FieldError(f"{Hop.label}: weight has Gamma(psi) up to {bound:.6g} > 1")
        return cls(psi, bound)


def clipped_distance_weight(
    Hop: StiffnessOperator,
    cap: float,
    axis: int = 0,
) -> LipschitzWeight:
    """psi = min(x_axis, cap) / sqrt(max (C + eps I)_aa), certified against the operator."""
    grid = Hop.grid
    diagonal = Hop.cell_coefficients[:, axis, axis] + Hop.epsilon
    scale = 1.0 / math.sqrt(float(diagonal.max()))
    values = np.minimum(grid.nodes()[:, axis], cap) * scale
    return LipschitzWeight.certify(Hop, GridFunction(values, grid))


def _cell_average(grid: Grid, values: FloatArray) -> FloatArray:
    """Mean of the 2^d corner values of every cell."""
    n = grid.n
    average = sp.diags(
        [np.full(n - 1, 0.5), np.full(n - 1, 0.5)], [0, 1], shape=(n - 1, n), format="csr"
    )
    A = average
    for _ in range(grid.d - 1):
        A = sp.kron(A, average, format="csr")
    return np.asarray(A @ values)


@dataclass(frozen=True)
class DaviesGaffneyReport:
    tau: float
    t: float
    lhs: float
    rhs: float
    slack: float
    integrated: float
    integrated_error: float
    integrated_bound: float
    integrated_slack: float

    def as_dict(self) -> dict[str, Any]:
        return {
            "tau": self.tau,
            "t": self.t,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "slack": self.slack,
            "integrated": self.integrated,
            "integrated_error": self.integrated_error,
            "integrated_bound": self.integrated_bound,
            "integrated_slack": self.integrated_slack,
        }


def davies_gaffney_check(
    Hop: StiffnessOperator,
    weight: LipschitzWeight,
    phi: GridFunction,
    tau: float,
    t: float,
    settings: Settings | None = None,
) -> DaviesGaffneyReport:
    """Compare ||U S_t phi|| with e^{tau^2 t} ||U phi|| for U = e^{tau psi}.

    Also integrates int_0^t ds int U^2 Gamma_eps(S_s phi) by the trapezoid rule on
    64 steps (32 for the error estimate) against 2 e^{2 tau^2 t} ||U phi||^2.
    """
    if weight.bound > 1.0 + CERTIFICATE_SLACK:
        raise FieldError(f"weight certificate {weight.bound:.6g} exceeds 1")
    grid = Hop.grid
    U = np.exp(tau * weight.psi.values)
    weighted_phi = GridFunction(U * phi.values, grid).l2_norm()

    # S_s phi on a uniform time grid of 2 * TIME_PANELS steps
    steps = 2 * TIME_PANELS
    dt = t / steps
    U2_cells = _cell_average(grid, U**2)
    density = np.empty(steps + 1)
    state = phi
    for j in range(steps + 1):
        if j > 0:
            state = evolve(Hop, state, dt, settings).result
        gamma = carre_du_champ(Hop, state)
        density[j] = float(np.sum(U2_cells * gamma.values) * grid.cell_volume)
    final = state

    lhs = GridFunction(U * final.values, grid).l2_norm()
    rhs = math.exp(tau**2 * t) * weighted_phi
    fine = float(trapezoid(density, dx=dt))
    coarse = float(trapezoid(density[::2], dx=2 * dt))
    bound = 2.0 * math.exp(2.0 * tau**2 * t) * weighted_phi**2

    report = DaviesGaffneyReport(
        tau=tau,
        t=t,
        lhs=lhs,
        rhs=rhs,
        slack=rhs - lhs,
        integrated=fine,
        integrated_error=abs(fine - coarse),
        integrated_bound=bound,
        integrated_slack=bound - fine,
    )
    logger.debug(
        f"{Hop.label}: tau={tau} t={t} slack={report.slack:.3e} "
        f"integrated slack={report.integrated_slack:.3e}"
    )
    return report

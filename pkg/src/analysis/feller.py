"""
Feller's test for the generator d/dx c(x) d/dx on the line.

With scale density 1/c and Lebesgue speed, the end +inf is reached in
finite time iff s(inf) < inf and int^inf (s(inf) - s(x)) dx < inf. Both
improper integrals are computed to the cutoff and closed with a power-law
tail fitted on the last decade; exponents inside the band between the
two thresholds are reported as inconclusive.
"""

import numpy as np
from numpy.typing import NDArray

from src.coeff.expr import ScalarFieldExpr
from src.coeff.growth import interval_integrals
from src.errors import FieldError, InsufficientDataError
from src.logging_config import get_logger
from src.models import FellerEnd, FellerStatus, FellerVerdict

logger = get_logger("analysis.feller")

FloatArray = NDArray[np.float64]

DIVERGENT_EXPONENT = 1.1
CONVERGENT_EXPONENT = 1.25
NEAR_PANELS = 32
FAR_PANELS = 512


def _panel_edges(cutoff: float) -> FloatArray:
    near = np.linspace(0.0, 1.0, NEAR_PANELS + 1)
    far = np.geomspace(1.0, cutoff, FAR_PANELS + 1)[1:]
    return np.concatenate([near, far])


def _power_tail(x: FloatArray, y: FloatArray, what: str) -> tuple[float, float]:
    """Fit y ~ c x^-q over the last decade of x."""
    mask = (x >= x[-1] / 10.0) & (y > 0)
    if np.count_nonzero(mask) < 4:
        raise InsufficientDataError(f"too few positive samples to fit the tail of {what}")
    slope, intercept = np.polyfit(np.log(x[mask]), np.log(y[mask]), 1)
    return float(np.exp(intercept)), float(-slope)


def _band(exponent: float, below: FellerStatus, above: FellerStatus) -> FellerStatus:
    if exponent <= DIVERGENT_EXPONENT:
        return below
    if exponent >= CONVERGENT_EXPONENT:
        return above
    return FellerStatus.INCONCLUSIVE


def _feller_end(c_expr: ScalarFieldExpr, sign: float, cutoff: float) -> FellerEnd:
    def scale_density(x: FloatArray) -> FloatArray:
        flat = sign * np.asarray(x, dtype=np.float64).reshape(-1, 1)
        c = c_expr(flat)
        bad = ~(c > 0) | ~np.isfinite(c)
        if np.any(bad):
            where = float(flat[np.argmax(bad), 0])
            raise FieldError(f"c is not strictly positive at x={where:.6g}")
        return np.asarray(1.0 / c, dtype=np.float64).reshape(np.shape(x))

    side = "+inf" if sign > 0 else "-inf"
    edges = _panel_edges(cutoff)
    pieces = interval_integrals(scale_density, edges, f"scale toward {side}")
    tail_c, q = _power_tail(edges, scale_density(edges), "1/c")
    scale_status = _band(q, FellerStatus.CONSERVATIVE, FellerStatus.EXPLOSIVE)
    if scale_status is not FellerStatus.EXPLOSIVE:
        # s(inf) = inf leaves the end unreachable
        logger.debug(f"{side}: 1/c decays like x^-{q:.4f}, scale not shown finite")
        return FellerEnd(status=scale_status, scale_finite=False, scale_tail_exponent=q)

    # remaining scale s(inf) - s(x_k), summed from the far end
    beyond = tail_c * cutoff ** (1.0 - q) / (q - 1.0)
    remaining = np.concatenate([np.cumsum(pieces[::-1])[::-1], [0.0]]) + beyond
    scale_limit = float(remaining[0])
    _, p = _power_tail(edges, remaining, "s(inf) - s(x)")
    status = _band(p, FellerStatus.CONSERVATIVE, FellerStatus.EXPLOSIVE)
    logger.debug(f"{side}: s(inf)={scale_limit:.8g}, remainder ~ x^-{p:.4f}: {status.value}")
    return FellerEnd(
        status=status,
        scale_finite=True,
        scale_limit=scale_limit,
        scale_tail_exponent=q,
        explosion_tail_exponent=p,
    )


def feller_oracle_1d(c_expr: ScalarFieldExpr, cutoff: float = 1e6) -> FellerVerdict:
    """Conservative, explosive or inconclusive for d/dx c d/dx, both ends examined."""
    if c_expr.d != 1:
        raise FieldError(f"Feller test needs a one-dimensional coefficient, got d={c_expr.d}")
    if not cutoff > 10.0:
        raise FieldError(f"cutoff must exceed 10, got {cutoff}")
    plus = _feller_end(c_expr, 1.0, cutoff)
    minus = _feller_end(c_expr, -1.0, cutoff)
    ends = (plus.status, minus.status)
    if FellerStatus.EXPLOSIVE in ends:
        status = FellerStatus.EXPLOSIVE
    elif all(s is FellerStatus.CONSERVATIVE for s in ends):
        status = FellerStatus.CONSERVATIVE
    else:
        status = FellerStatus.INCONCLUSIVE
    logger.info(f"Feller test for c={c_expr}: {status.value}")
    return FellerVerdict(status=status, plus=plus, minus=minus, cutoff=cutoff)

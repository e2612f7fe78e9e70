"""
Growth functionals of a coefficient field.

nu(s) is the largest spectral norm of C on the ball of radius s, rho(s) the
distance to the origin in the metric (1 + nu)^(-1/2) |dx|, and the volume
table records the Lebesgue measure of the rho-balls. The two classifiers
read the asymptotic Tikhonov and Tacklind conditions off a finite window
and say "inconclusive" when the window does not decide.
"""

from collections.abc import Callable
from dataclasses import dataclass, replace

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.integrate import simpson
from scipy.special import gamma

from src.coeff.field import CoefficientField
from src.errors import GridError, InsufficientDataError
from src.logging_config import get_logger
from src.models import GrowthVerdict, TacklindStatus, TikhonovStatus

logger = get_logger("coeff.growth")

FloatArray = NDArray[np.float64]
NuFunction = Callable[[FloatArray], FloatArray]

QUADRATURE_RTOL = 1e-10
MAX_SIMPSON_PANELS = 4096
RHO_CRITICAL_EXPONENT = 1.0
TAIL_EXPONENT_BAND = 0.1
LOG_FIT_MIN_RADIUS = float(np.e)
RESIDUAL_SLOPE_TOLERANCE = 1e-3
RESIDUAL_SLOPE_INCONCLUSIVE = 1e-2
CAUCHY_TOLERANCE = 1e-6
TACKLIND_CRITICAL_EXPONENT = 2.0
EXPONENT_TOLERANCE = 0.1
LOG_EXPONENT_TOLERANCE = 0.1
MIN_WINDOW_SAMPLES = 8
DOUBLING_STEPS = 5


def unit_ball_volume(d: int) -> float:
    """Euclidean volume of the unit ball in R^d."""
    return float(np.pi ** (d / 2) / gamma(d / 2 + 1))


def sphere_directions(d: int, angular_samples: int) -> FloatArray:
    """Deterministic unit vectors: +-1 in 1-d, equal angles in 2-d, a Fibonacci lattice in 3-d."""
    if d == 1:
        return np.array([[1.0], [-1.0]])
    if d == 2:
        angles = 2.0 * np.pi * np.arange(angular_samples) / angular_samples
        return np.stack([np.cos(angles), np.sin(angles)], axis=1)
    k = np.arange(angular_samples) + 0.5
    z = 1.0 - 2.0 * k / angular_samples
    radius = np.sqrt(1.0 - z**2)
    phi = np.pi * (1.0 + np.sqrt(5.0)) * k
    return np.stack([radius * np.cos(phi), radius * np.sin(phi), z], axis=1)


@dataclass(frozen=True, eq=False)
class GrowthProfile:
    """Tabulated nu(s) and, once filled, rho(s) with its tail extrapolation."""

    s_grid: FloatArray
    nu: FloatArray
    d: int = 1
    label: str = "profile"
    nu_fn: NuFunction | None = None
    rho: FloatArray | None = None
    rho_limit: float | None = None
    rho_divergent: bool = False
    tail_c: float | None = None
    tail_q: float | None = None

    @classmethod
    def from_function(
        cls,
        nu_fn: NuFunction,
        s_grid: ArrayLike,
        d: int = 1,
        label: str = "profile",
    ) -> "GrowthProfile":
        """Profile from a closed-form nu; quadrature then samples nu_fn directly."""
        s = _radii(s_grid)
        nu = np.maximum.accumulate(np.maximum(np.asarray(nu_fn(s), dtype=np.float64), 0.0))
        return cls(s_grid=s, nu=nu, d=d, label=label, nu_fn=nu_fn)

    def integrand(self, t: FloatArray) -> FloatArray:
        """(1 + nu(t))^(-1/2), from nu_fn when known, else from the table."""
        if self.nu_fn is not None:
            nu = np.maximum(np.asarray(self.nu_fn(t), dtype=np.float64), 0.0)
        else:
            nu = np.interp(t, self.s_grid, self.nu)
        return 1.0 / np.sqrt(1.0 + nu)


def _radii(s_grid: ArrayLike) -> FloatArray:
    s = np.asarray(s_grid, dtype=np.float64).ravel()
    if s.size < 2:
        raise GridError("s_grid needs at least 2 radii")
    if np.any(np.diff(s) <= 0) or s[0] < 0:
        raise GridError("s_grid must be non-negative and strictly increasing")
    if s[0] > 0:
        s = np.concatenate([[0.0], s])
    return s


def nu_profile(
    field: CoefficientField,
    s_grid: ArrayLike,
    angular_samples: int = 64,
) -> GrowthProfile:
    """nu(s) as the running maximum of ||C(x)|| over sampled spheres |x| = s."""
    s = _radii(s_grid)
    directions = sphere_directions(field.d, angular_samples)
    points = (s[:, None, None] * directions[None, :, :]).reshape(-1, field.d)
    eigenvalues = np.linalg.eigvalsh(field.matrices(points))
    norms = np.max(np.abs(eigenvalues), axis=1).reshape(s.size, directions.shape[0])
    nu = np.maximum.accumulate(norms.max(axis=1))
    logger.debug(
        f"{field.label}: nu over {s.size} radii x {directions.shape[0]} directions, "
        f"nu({s[-1]:.4g})={nu[-1]:.6g}"
    )
    return GrowthProfile(s_grid=s, nu=nu, d=field.d, label=field.label)


def interval_integrals(fn: NuFunction, edges: FloatArray, label: str = "") -> FloatArray:
    """Simpson on every interval of edges, doubling panels until the change is below
    QUADRATURE_RTOL relative.
    """
    a = edges[:-1, None]
    width = np.diff(edges)[:, None]
    previous: FloatArray | None = None
    panels = 2
    while True:
        t = a + width * np.linspace(0.0, 1.0, panels + 1)[None, :]
        current = np.asarray(simpson(fn(t), x=t, axis=1))
        if previous is not None:
            change = np.abs(current - previous)
            if np.all(change <= QUADRATURE_RTOL * np.abs(current)):
                return current
        if panels >= MAX_SIMPSON_PANELS:
            logger.warning(f"{label}: quadrature stopped at {panels} panels per interval")
            return current
        previous = current
        panels *= 2


def log_power_fit(x: FloatArray, y: FloatArray) -> tuple[float, float] | None:
    """Least squares y ~ k + p log x + g log log x; None unless every x exceeds e."""
    if x.size < 4 or x.min() <= LOG_FIT_MIN_RADIUS:
        return None
    log_x = np.log(x)
    design = np.stack([np.ones_like(x), log_x, np.log(log_x)], axis=1)
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    return float(coef[1]), float(coef[2])


def _tail_window(profile: GrowthProfile) -> NDArray[np.bool_]:
    s = profile.s_grid
    mask = s >= s[-1] / 10.0
    if np.count_nonzero(mask) < 4:
        mask = np.zeros_like(s, dtype=bool)
        mask[-max(4, s.size // 2) :] = True
    mask &= s > 0
    if np.count_nonzero(mask) < 2:
        raise InsufficientDataError(f"{profile.label}: too few positive radii for a tail fit")
    return mask


def _fit_tail(profile: GrowthProfile) -> tuple[float, float]:
    """Fit (1 + nu)^(-1/2) ~ c s^(-q) over the last decade of the grid."""
    s = profile.s_grid[_tail_window(profile)]
    slope, intercept = np.polyfit(np.log(s), np.log(profile.integrand(s)), 1)
    return float(np.exp(intercept)), float(-slope)


def _rho_diverges(profile: GrowthProfile, q: float) -> bool:
    """int^inf s^-q (log s)^-g ds = inf, with q and g from the log-corrected tail fit.

    Near q = 1 the plain power fit cannot tell s^-1 (log s)^-1/2 from s^-(1+delta),
    so the decision there rests on the log exponent g.
    """
    s = profile.s_grid[_tail_window(profile)]
    corrected = log_power_fit(s, np.log(profile.integrand(s)))
    if corrected is None:
        return q <= RHO_CRITICAL_EXPONENT + TAIL_EXPONENT_BAND
    q_log, g = -corrected[0], -corrected[1]
    logger.debug(f"{profile.label}: log-corrected tail q={q_log:.4f}, g={g:.4f}")
    if q_log < RHO_CRITICAL_EXPONENT - TAIL_EXPONENT_BAND:
        return True
    if q_log > RHO_CRITICAL_EXPONENT + TAIL_EXPONENT_BAND:
        return q <= RHO_CRITICAL_EXPONENT
    return g <= 1.0 or q <= RHO_CRITICAL_EXPONENT


def rho_distance(profile: GrowthProfile) -> GrowthProfile:
    """Fill rho(s) = int_0^s (1 + nu)^(-1/2) dt and extrapolate rho(infinity)."""
    pieces = interval_integrals(profile.integrand, profile.s_grid, profile.label)
    rho = np.concatenate([[0.0], np.cumsum(pieces)])
    c, q = _fit_tail(profile)
    divergent = _rho_diverges(profile, q)
    limit = None
    if not divergent:
        s_max = profile.s_grid[-1]
        limit = float(rho[-1] + c * s_max ** (1.0 - q) / (q - 1.0))
    logger.debug(
        f"{profile.label}: rho({profile.s_grid[-1]:.4g})={rho[-1]:.10g}, tail exponent "
        f"q={q:.4f}, " + ("rho divergent" if divergent else f"rho(inf)~{limit:.10g}")
    )
    return replace(
        profile, rho=rho, rho_limit=limit, rho_divergent=divergent, tail_c=c, tail_q=q
    )


@dataclass(frozen=True, eq=False)
class VolumeTable:
    """r -> log|B_rho(r)|; +inf marks r beyond rho(infinity)."""

    r_grid: FloatArray
    log_volume: FloatArray
    d: int = 1

    def __post_init__(self) -> None:
        if self.r_grid.shape != self.log_volume.shape or self.r_grid.ndim != 1:
            raise GridError("r_grid and log_volume must be matching 1-d arrays")
        if np.any(np.diff(self.r_grid) <= 0):
            raise GridError("r_grid must be strictly increasing")
        if np.any(np.isnan(self.log_volume)):
            raise GridError("log_volume contains NaN")

    @classmethod
    def from_log_volume(
        cls,
        r_grid: ArrayLike,
        log_volume: Callable[[FloatArray], FloatArray],
        d: int = 1,
    ) -> "VolumeTable":
        r = np.asarray(r_grid, dtype=np.float64)
        return cls(r, np.asarray(log_volume(r), dtype=np.float64), d)

    @property
    def volume(self) -> FloatArray:
        with np.errstate(over="ignore"):
            return np.exp(self.log_volume)

    @property
    def infinite(self) -> NDArray[np.bool_]:
        return np.isposinf(self.log_volume)


def _sigma(profile: GrowthProfile, r: FloatArray) -> FloatArray:
    """sup{s : rho(s) < r}, inverting the tail model beyond the table."""
    assert profile.rho is not None
    rho_max = profile.rho[-1]
    s_max = profile.s_grid[-1]
    sigma = np.interp(r, profile.rho, profile.s_grid)
    beyond = r > rho_max
    if not beyond.any():
        return sigma
    c = profile.tail_c or 1.0
    q = profile.tail_q if profile.tail_q is not None else 0.0
    excess = r[beyond] - rho_max
    if profile.rho_limit is not None:
        gap = profile.rho_limit - r[beyond]
        tail = np.full(gap.shape, np.inf)
        inside = gap > 0
        tail[inside] = (c / ((q - 1.0) * gap[inside])) ** (1.0 / (q - 1.0))
        sigma[beyond] = np.maximum(tail, s_max)
        return sigma
    logger.debug(f"{profile.label}: extrapolating sigma beyond rho({s_max:.4g})")
    if q < 1.0 - 1e-9:
        base = s_max ** (1.0 - q) + (1.0 - q) * excess / c
        sigma[beyond] = base ** (1.0 / (1.0 - q))
    else:
        # q near 1 with a log correction: rho grows logarithmically.
        sigma[beyond] = s_max * np.exp(excess * s_max ** (q - 1.0) / c)
    return sigma


def ball_volume(profile: GrowthProfile, r_grid: ArrayLike | None = None) -> VolumeTable:
    """|B_rho(r)| = omega_d sigma(r)^d, stored as logarithms."""
    if profile.rho is None:
        profile = rho_distance(profile)
    assert profile.rho is not None
    if r_grid is None:
        top = profile.rho[-1] if profile.rho_limit is None else 1.1 * profile.rho_limit
        r = np.linspace(top / 200.0, top, 200)
    else:
        r = np.asarray(r_grid, dtype=np.float64)
    if np.any(r <= 0):
        raise GridError("volume radii must be positive")
    sigma = _sigma(profile, r)
    with np.errstate(divide="ignore"):
        log_volume = np.log(unit_ball_volume(profile.d)) + profile.d * np.log(sigma)
    n_inf = int(np.count_nonzero(np.isposinf(log_volume)))
    if n_inf:
        logger.info(f"{profile.label}: |B_rho(r)| infinite for {n_inf} radii beyond rho(inf)")
    return VolumeTable(r, log_volume, profile.d)


def _window(vol: VolumeTable, fit_window: tuple[float, float] | None) -> NDArray[np.bool_]:
    if fit_window is None:
        lo, hi = 0.5 * vol.r_grid[-1], vol.r_grid[-1]
    else:
        lo, hi = fit_window
    return (vol.r_grid >= lo) & (vol.r_grid <= hi)


def tikhonov_check(
    vol: VolumeTable,
    fit_window: tuple[float, float] | None = None,
) -> GrowthVerdict:
    """Classify |B_rho(r)| <= a exp(b r^2) from the upper half of the table (or fit_window)."""
    if vol.infinite.any():
        r_inf = float(vol.r_grid[np.argmax(vol.infinite)])
        return GrowthVerdict(
            tikhonov=TikhonovStatus.VIOLATED,
            notes=[f"|B_rho(r)| is infinite from r={r_inf:.6g}"],
        )

    mask = _window(vol, fit_window)
    if np.count_nonzero(mask) < MIN_WINDOW_SAMPLES:
        raise InsufficientDataError(
            f"tikhonov check needs {MIN_WINDOW_SAMPLES} samples, window has "
            f"{np.count_nonzero(mask)}"
        )
    x = vol.r_grid[mask] ** 2
    y = vol.log_volume[mask]
    b, log_a = np.polyfit(x, y, 1)

    half = x.size // 2
    b_lower, log_a_lower = np.polyfit(x[:half], y[:half], 1)
    residual = y[half:] - (log_a_lower + b_lower * x[half:])
    slope = float(np.polyfit(x[half:], residual, 1)[0])

    if slope <= RESIDUAL_SLOPE_TOLERANCE:
        status = TikhonovStatus.SATISFIED
    elif slope <= RESIDUAL_SLOPE_INCONCLUSIVE:
        status = TikhonovStatus.INCONCLUSIVE
    else:
        status = TikhonovStatus.VIOLATED
    logger.debug(f"tikhonov: b={b:.6g}, residual slope {slope:.3e} -> {status.value}")
    return GrowthVerdict(
        tikhonov=status,
        tikhonov_a=float(np.exp(log_a)),
        tikhonov_b=float(b),
        residual_slope=slope,
    )


def _power_law_integral(r: FloatArray, L: FloatArray, T: FloatArray) -> FloatArray:
    """int_{r[0]}^T r / L(r) dr with L interpolated as a power of r on each segment."""
    beta = np.log(L[1:] / L[:-1]) / np.log(r[1:] / r[:-1])

    def segment(i: NDArray[np.intp], upper: FloatArray) -> FloatArray:
        ri, bi = r[i], beta[i]
        scale = ri ** bi / L[i]
        near_two = np.abs(2.0 - bi) < 1e-12
        exponent = np.where(near_two, 1.0, 2.0 - bi)
        power = (upper**exponent - ri**exponent) / exponent
        return np.asarray(scale * np.where(near_two, np.log(upper / ri), power))

    nodes = np.arange(r.size - 1)
    cumulative = np.concatenate([[0.0], np.cumsum(segment(nodes, r[1:]))])
    k = np.clip(np.searchsorted(r, T, side="right") - 1, 0, r.size - 2)
    return np.asarray(cumulative[k] + segment(k, T))


def tacklind_check(vol: VolumeTable, R: float, r_max: float) -> GrowthVerdict:
    """Classify int_R^inf r (log|B_rho(r)|)^(-1) dr = inf from partial integrals on [R, r_max]."""
    if not R < r_max:
        raise InsufficientDataError(f"need R < r_max, got R={R}, r_max={r_max}")
    inside = (vol.r_grid >= R) & (vol.r_grid <= r_max)
    if (vol.infinite & (vol.r_grid <= r_max)).any():
        r_inf = float(vol.r_grid[np.argmax(vol.infinite)])
        return GrowthVerdict(
            tacklind=TacklindStatus.CONVERGENT,
            notes=[
                f"|B_rho(r)| is infinite from r={r_inf:.6g}; the integrand vanishes there "
                "but the conservation criterion does not apply"
            ],
        )
    if np.count_nonzero(inside) < MIN_WINDOW_SAMPLES:
        raise InsufficientDataError(
            f"tacklind check needs {MIN_WINDOW_SAMPLES} samples in [{R}, {r_max}]"
        )
    r = vol.r_grid[inside]
    L = vol.log_volume[inside]
    if np.any(L <= 0):
        raise InsufficientDataError(f"|B_rho(r)| must exceed 1 on [{R}, {r_max}]")

    T = r[0] + (r[-1] - r[0]) / 2.0 ** np.arange(DOUBLING_STEPS, -1, -1)
    partial = _power_law_integral(r, L, T)

    top = slice(r.size // 2, None)
    p, log_c = np.polyfit(np.log(r[top]), np.log(L[top]), 1)
    p = float(p)
    c = float(np.exp(log_c))
    increments = np.diff(partial)
    ratio = float(increments[-1] / increments[-2]) if increments[-2] > 0 else np.inf

    # log|B| ~ c r^power (log r)^g separates r^2 log r from r^(2 + delta)
    corrected = log_power_fit(r[top], np.log(L[top]))
    power, g = corrected if corrected is not None else (p, None)
    critical = TACKLIND_CRITICAL_EXPONENT

    notes: list[str] = []
    if g is not None:
        notes.append(f"log-corrected exponent {power:.4f}, log exponent {g:.4f}")
    if power < critical - EXPONENT_TOLERANCE and ratio >= 0.5:
        status = TacklindStatus.DIVERGENT
    elif power <= critical + EXPONENT_TOLERANCE:
        if g is not None and g <= 1.0 + LOG_EXPONENT_TOLERANCE:
            status = TacklindStatus.DIVERGENT
        else:
            notes.append(f"exponent {power:.3f} is within {EXPONENT_TOLERANCE} of critical")
            status = TacklindStatus.INCONCLUSIVE
    elif p > critical:
        totals = partial[-3:] + T[-3:] ** (2.0 - p) / (c * (p - 2.0))
        spread = float((totals.max() - totals.min()) / abs(totals.mean()))
        notes.append(f"tail-corrected totals spread {spread:.3e}")
        status = TacklindStatus.CONVERGENT
        if spread > CAUCHY_TOLERANCE:
            status = TacklindStatus.INCONCLUSIVE
    else:
        notes.append(f"increment ratio {ratio:.3f} shows saturation at exponent {power:.3f}")
        status = TacklindStatus.INCONCLUSIVE
    logger.debug(
        f"tacklind: p={power:.4f}, g={g}, last increment ratio {ratio:.3f} -> {status.value}"
    )
    return GrowthVerdict(
        tacklind=status,
        tail_exponent=power,
        log_exponent=g,
        partial_integrals=[(float(t), float(i)) for t, i in zip(T, partial, strict=True)],
        notes=notes,
    )


def classify_growth(
    vol: VolumeTable,
    fit_window: tuple[float, float] | None = None,
    R: float | None = None,
    r_max: float | None = None,
) -> GrowthVerdict:
    """Both classifiers on one table, reconciled: Tikhonov satisfied implies Tacklind divergent."""
    notes: list[str] = []
    try:
        tik = tikhonov_check(vol, fit_window)
    except InsufficientDataError as exc:
        tik = GrowthVerdict(notes=[f"tikhonov: {exc}"])

    window = _window(vol, fit_window)
    finite = window & ~vol.infinite & (vol.log_volume > 0)
    if R is None:
        R = float(vol.r_grid[finite][0]) if finite.any() else float(vol.r_grid[window][0])
    if r_max is None:
        r_max = float(vol.r_grid[window][-1])
    try:
        tack = tacklind_check(vol, R, r_max)
    except InsufficientDataError as exc:
        tack = GrowthVerdict(notes=[f"tacklind: {exc}"])

    tik_status = tik.tikhonov
    tack_status = tack.tacklind
    if tik_status is TikhonovStatus.SATISFIED:
        if tack_status is TacklindStatus.INCONCLUSIVE:
            tack_status = TacklindStatus.DIVERGENT
            notes.append("tacklind promoted to divergent by the tikhonov verdict")
        elif tack_status is TacklindStatus.CONVERGENT:
            tik_status = TikhonovStatus.INCONCLUSIVE
            notes.append("tikhonov demoted: contradicts a convergent tacklind integral")
            logger.warning("growth classifiers disagree; tikhonov reported inconclusive")

    return GrowthVerdict(
        tikhonov=tik_status,
        tikhonov_a=tik.tikhonov_a,
        tikhonov_b=tik.tikhonov_b,
        residual_slope=tik.residual_slope,
        tacklind=tack_status,
        tail_exponent=tack.tail_exponent,
        log_exponent=tack.log_exponent,
        partial_integrals=tack.partial_integrals,
        notes=tik.notes + tack.notes + notes,
    )

"""
Two-sided envelopes of computed heat kernels.

Kernel samples are mapped to u = |x - y|^2 / t and w = log(t^{d/2} K). A
Gaussian bound a t^{-d/2} e^{-b u} is then the half-plane w <= log a - b u,
so every slope has a covering amplitude. Each envelope takes the slope
whose line sits closest to the samples on average.
"""

from collections.abc import Callable, Sequence
from dataclasses import dataclass
from typing import Any

import numpy as np
from numpy.typing import NDArray
from scipy.optimize import minimize_scalar
from scipy.special import gamma

from src.analysis.profiles import RadialProfile, profile_moment
from src.config import AnalysisSpec
from src.errors import DivergentMomentError, EnvelopeError
from src.logging_config import get_logger
from src.models import GaussianEnvelope
from src.semigroup.evolve import KernelSlice

logger = get_logger("analysis.envelope")

FloatArray = NDArray[np.float64]

SLOPE_CANDIDATES = np.geomspace(1e-3, 1e2, 200)
SLOPE_XTOL = 1e-11
COVERAGE_TOLERANCE = 1e-9
PROFILE_POINTS = 401


@dataclass(frozen=True)
class EnvelopeWindow:
    """Which kernel samples an envelope must cover."""

    boundary_margin: float = 0.25
    kernel_floor: float = 1e-300
    noise_floor: float = 1e-10
    u_max: float = 40.0

    @classmethod
    def from_analysis(cls, spec: AnalysisSpec) -> "EnvelopeWindow":
        return cls(spec.boundary_margin, spec.kernel_floor, spec.noise_floor, spec.u_max)


@dataclass(frozen=True, eq=False)
class WindowSamples:
    u: FloatArray
    w: FloatArray
    d: int
    t_values: list[float]
    vanished: int

    @property
    def size(self) -> int:
        return int(self.u.size)


def window_samples(slices: Sequence[KernelSlice], window: EnvelopeWindow) -> WindowSamples:
    """Collect (u, w) over all slices, dropping nodes near the boundary and beyond u_max.

    A node inside the window whose kernel value is at or below the floor is
    counted as vanished rather than sampled.
    """
    if not slices:
        raise EnvelopeError("no kernel slices to fit")
    t_values = sorted({s.t for s in slices})
    if len(t_values) < 2:
        raise EnvelopeError(f"envelope fit needs at least two distinct times, got {t_values}")
    d = slices[0].values.grid.d
    us: list[FloatArray] = []
    ws: list[FloatArray] = []
    vanished = 0
    for kernel in slices:
        grid = kernel.values.grid
        nodes = grid.nodes()
        u = kernel.distances_squared() / kernel.t
        inside = grid.distance_to_boundary(nodes) >= window.boundary_margin * grid.L
        inside &= u <= window.u_max
        K = kernel.values.values
        floor = max(window.kernel_floor, window.noise_floor * float(K.max()))
        usable = inside & (K > floor)
        vanished += int(np.count_nonzero(inside & ~usable))
        us.append(u[usable])
        ws.append(np.log(K[usable]) + 0.5 * d * np.log(kernel.t))
    samples = WindowSamples(np.concatenate(us), np.concatenate(ws), d, t_values, vanished)
    if samples.size == 0:
        raise EnvelopeError("fit window is empty")
    return samples


def _tightest_slope(gap: Callable[[float], float]) -> float:
    """Minimize a convex piecewise-linear mean gap: slope grid, then bounded Brent."""
    values = np.array([gap(float(b)) for b in SLOPE_CANDIDATES])
    k = int(np.argmin(values))
    lo = float(SLOPE_CANDIDATES[max(k - 1, 0)])
    hi = float(SLOPE_CANDIDATES[min(k + 1, SLOPE_CANDIDATES.size - 1)])
    result = minimize_scalar(gap, bounds=(lo, hi), method="bounded", options={"xatol": SLOPE_XTOL})
    if result.success and float(result.fun) <= values[k]:
        return float(result.x)
    return float(SLOPE_CANDIDATES[k])


def _upper(u: FloatArray, w: FloatArray) -> tuple[float, float]:
    """The covering line w <= log a - b u with the smallest mean gap over the samples."""
    mean_u = float(u.mean())

    def gap(b: float) -> float:
        return float(np.max(w + b * u)) - b * mean_u

    b = _tightest_slope(gap)
    return float(np.max(w + b * u)), b


def _lower(u: FloatArray, w: FloatArray) -> tuple[float, float]:
    """The supporting line w >= log a' - b' u with the smallest mean gap under the samples."""
    mean_u = float(u.mean())

    def gap(b: float) -> float:
        return b * mean_u - float(np.min(w + b * u))

    b = _tightest_slope(gap)
    return float(np.min(w + b * u)), b


def fit_gaussian_envelope(
    slices: Sequence[KernelSlice], window: EnvelopeWindow | None = None
) -> GaussianEnvelope:
    """a G_{b;t} >= K_t >= a' G_{b';t} on the window, or no lower bound if K vanishes there."""
    window = window or EnvelopeWindow()
    samples = window_samples(slices, window)
    u, w = samples.u, samples.w

    log_a, b = _upper(u, w)
    upper_gap = float(np.min(log_a - b * u - w))
    if upper_gap < -COVERAGE_TOLERANCE:
        raise EnvelopeError(f"upper envelope misses a sample by {-upper_gap:.3e} on log scale")

    a_lower = b_lower = lower_gap = None
    if samples.vanished:
        logger.warning(f"kernel vanishes at {samples.vanished} window nodes: no lower bound")
    else:
        log_a_lower, b_low = _lower(u, w)
        # any smaller amplitude or larger rate stays feasible
        log_a_lower = min(log_a_lower, log_a)
        b_low = max(b_low, b)
        lower_gap = float(np.min(w - log_a_lower + b_low * u))
        if lower_gap < -COVERAGE_TOLERANCE:
            raise EnvelopeError(f"lower envelope misses a sample by {-lower_gap:.3e}")
        a_lower, b_lower = float(np.exp(log_a_lower)), b_low

    envelope = GaussianEnvelope(
        d=samples.d,
        a=float(np.exp(log_a)),
        b=b,
        a_lower=a_lower,
        b_lower=b_lower,
        t_values=samples.t_values,
        u_max=float(u.max()),
        n_points=samples.size,
        upper_gap=upper_gap,
        lower_gap=lower_gap,
    )
    logger.info(
        f"envelope a={envelope.a:.6g} b={envelope.b:.6g} a'={a_lower} b'={b_lower} "
        f"on {samples.size} samples"
    )
    return envelope


@dataclass(frozen=True, eq=False)
class ProfilePair:
    """sigma >= K t^{d/2} >= rho as functions of u, with both moment conventions."""

    sigma: RadialProfile
    rho: RadialProfile
    d: int
    sigma_moment: float
    rho_moment: float
    sigma_volume_moment: float
    rho_volume_moment: float

    def __post_init__(self) -> None:
        u = self.sigma.u
        if np.any(self.rho(u) > self.sigma(u) * (1.0 + 1e-12) + 1e-300):
            raise EnvelopeError("rho exceeds sigma on the profile grid")
        if not np.isfinite(self.sigma_moment):
            raise DivergentMomentError("upper profile has an infinite moment")

    @property
    def degenerate(self) -> bool:
        """No positive lower profile: the kernel vanished inside the window."""
        return not self.rho_moment > 0

    def rows(self) -> list[dict[str, float]]:
        u = self.sigma.u
        sigma, rho = self.sigma(u), self.rho(u)
        return [
            {"u": float(x), "sigma": float(s), "rho": float(r)}
            for x, s, r in zip(u, sigma, rho, strict=True)
        ]

    def as_dict(self) -> dict[str, Any]:
        return {
            "d": self.d,
            "sigma_moment": self.sigma_moment,
            "rho_moment": self.rho_moment,
            "sigma_volume_moment": self.sigma_volume_moment,
            "rho_volume_moment": self.rho_volume_moment,
            "degenerate": self.degenerate,
        }


def _gaussian_moment(a: float, b: float, exponent: float) -> float:
    """int_0^inf u^exponent a e^{-b u} du."""
    return a * float(gamma(exponent + 1.0)) / b ** (exponent + 1.0)


def envelope_to_profiles(env: GaussianEnvelope) -> ProfilePair:
    """sigma(u) = a e^{-b u}, rho(u) = a' e^{-b' u} on a shared grid, moments in closed form."""
    d = env.d
    sigma = RadialProfile.gaussian(env.a, env.b, label="sigma")
    if env.a_lower is not None and env.b_lower is not None:
        rho = RadialProfile.gaussian(env.a_lower, env.b_lower, sigma.u_top, label="rho")
        rho_moment = _gaussian_moment(env.a_lower, env.b_lower, (d + 1) / 2.0)
        rho_volume = _gaussian_moment(env.a_lower, env.b_lower, d / 2.0)
    else:
        rho = RadialProfile(sigma.u, np.zeros_like(sigma.u), label="rho")
        rho_moment = rho_volume = 0.0
    return ProfilePair(
        sigma=sigma,
        rho=rho,
        d=d,
        sigma_moment=_gaussian_moment(env.a, env.b, (d + 1) / 2.0),
        rho_moment=rho_moment,
        sigma_volume_moment=_gaussian_moment(env.a, env.b, d / 2.0),
        rho_volume_moment=rho_volume,
    )


def fit_profile_envelope(
    slices: Sequence[KernelSlice],
    window: EnvelopeWindow | None = None,
    points: int = PROFILE_POINTS,
) -> ProfilePair:
    """Non-increasing majorant and minorant of t^{d/2} K in u, tabulated on a uniform grid.

    Between grid nodes g_k < g_{k+1} linear interpolation stays above (below)
    every sample because each node takes the max (min) over the samples
    reaching into its neighbouring interval.
    """
    window = window or EnvelopeWindow()
    samples = window_samples(slices, window)
    order = np.argsort(samples.u)
    u, v = samples.u[order], np.exp(samples.w[order])
    grid = np.linspace(0.0, max(float(u[-1]), 1e-12), points)

    # suffix max and prefix min over samples sorted by u
    suffix_max = np.maximum.accumulate(v[::-1])[::-1]
    prefix_min = np.minimum.accumulate(v)
    # sigma(g_k) = max{v : u > g_{k-1}}, rho(g_k) = min{v : u < g_{k+1}}
    start = np.searchsorted(u, np.concatenate([[-np.inf], grid[:-1]]), side="right")
    stop = np.searchsorted(u, np.concatenate([grid[1:], [np.inf]]), side="left")
    sigma_values = np.where(start < u.size, suffix_max[np.minimum(start, u.size - 1)], 0.0)
    rho_values = np.where(stop > 0, prefix_min[np.maximum(stop - 1, 0)], prefix_min[0])
    if samples.vanished:
        rho_values = np.zeros_like(rho_values)
    rho_values = np.minimum(rho_values, sigma_values)

    sigma = RadialProfile(grid, sigma_values, label="sigma")
    rho = RadialProfile(grid, rho_values, label="rho")
    d = samples.d
    try:
        sigma_moment = profile_moment(sigma, (d + 1) / 2.0)
        sigma_volume = profile_moment(sigma, d / 2.0)
    except DivergentMomentError:
        logger.warning("upper profile tail does not decay fast enough for a finite moment")
        raise
    return ProfilePair(
        sigma=sigma,
        rho=rho,
        d=d,
        sigma_moment=sigma_moment,
        rho_moment=0.0 if rho.is_zero() else profile_moment(rho, (d + 1) / 2.0),
        sigma_volume_moment=sigma_volume,
        rho_volume_moment=0.0 if rho.is_zero() else profile_moment(rho, d / 2.0),
    )

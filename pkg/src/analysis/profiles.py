"""
Tabulated radial profiles on u = |x - y|^2 / t >= 0 and their moments.

A profile is known on [0, u_top] (exactly through fn, or by linear
interpolation of the table) and continued beyond u_top by a tail model
fitted on the last decade of the table. Moments of a table are integrated
exactly segment by segment; profiles with a function go through quad.
"""

import math
from collections.abc import Callable
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.integrate import quad
from scipy.special import gamma, gammaincc

from src.errors import DivergentMomentError, EnvelopeError
from src.logging_config import get_logger

logger = get_logger("analysis.profiles")

FloatArray = NDArray[np.float64]
ProfileFunction = Callable[[FloatArray], FloatArray]

QUAD_RTOL = 1e-12
QUAD_ATOL = 1e-14
QUAD_LIMIT = 500
GAUSSIAN_DECADES = 80.0


def sphere_area(d: int) -> float:
    """Area of the unit sphere S^{d-1}; 2 for d = 1."""
    return 2.0 * math.pi ** (d / 2.0) / gamma(d / 2.0)


@dataclass(frozen=True)
class TailFit:
    """profile(u) ~ c u^-q (power) or c e^-qu (exponential) beyond u_top."""

    model: Literal["zero", "power", "exponential"]
    c: float = 0.0
    q: float = 0.0
    residual: float = 0.0


@dataclass(frozen=True, eq=False)
class RadialProfile:
    u: FloatArray
    values: FloatArray
    fn: ProfileFunction | None = None
    breaks: tuple[float, ...] = ()
    label: str = ""
    tail: TailFit = field(init=False)

    def __post_init__(self) -> None:
        u = np.asarray(self.u, dtype=np.float64)
        values = np.asarray(self.values, dtype=np.float64)
        if u.ndim != 1 or u.shape != values.shape or u.size < 4:
            raise EnvelopeError(f"{self.label}: profile table needs matching 1-d arrays")
        if u[0] != 0.0 or np.any(np.diff(u) <= 0):
            raise EnvelopeError(f"{self.label}: profile grid must start at 0 and increase")
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise EnvelopeError(f"{self.label}: profile values must be finite and non-negative")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "tail", _fit_tail(u, values, self.label))

    @classmethod
    def from_function(
        cls,
        fn: ProfileFunction,
        u_top: float,
        points: int = 2049,
        breaks: tuple[float, ...] = (),
        label: str = "",
    ) -> "RadialProfile":
        u = np.linspace(0.0, u_top, points)
        return cls(u, np.asarray(fn(u), dtype=np.float64), fn, breaks, label)

    @classmethod
    def gaussian(
        cls, a: float, b: float, u_top: float | None = None, label: str = ""
    ) -> "RadialProfile":
        """a e^{-b u}, tabulated far enough that the tail is below e^-80 of the peak."""
        top = GAUSSIAN_DECADES / b if u_top is None else u_top
        return cls.from_function(lambda u: a * np.exp(-b * u), top, label=label)

    @property
    def u_top(self) -> float:
        return float(self.u[-1])

    def __call__(self, u: ArrayLike) -> FloatArray:
        points = np.asarray(u, dtype=np.float64)
        if self.fn is not None:
            inside = np.asarray(self.fn(np.minimum(points, self.u_top)), dtype=np.float64)
        else:
            inside = np.interp(points, self.u, self.values)
        return np.where(points <= self.u_top, inside, self._tail(points))

    def _tail(self, u: FloatArray) -> FloatArray:
        tail = self.tail
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            if tail.model == "power":
                return tail.c * np.power(np.maximum(u, self.u_top), -tail.q)
            if tail.model == "exponential":
                return tail.c * np.exp(-tail.q * np.maximum(u, self.u_top))
        return np.zeros_like(u)

    def is_zero(self) -> bool:
        return not np.any(self.values > 0)

    def tail_integral(self, exponent: float) -> float:
        """int_{u_top}^inf u^exponent profile(u) du from the tail model."""
        tail, U = self.tail, self.u_top
        if tail.model == "zero":
            return 0.0
        if tail.model == "exponential":
            if tail.q <= 0:
                raise DivergentMomentError(f"{self.label}: non-decaying exponential tail")
            s = exponent + 1.0
            return float(tail.c * gamma(s) * gammaincc(s, tail.q * U) / tail.q**s)
        if tail.q <= exponent + 1.0:
            raise DivergentMomentError(
                f"{self.label}: tail u^-{tail.q:.4g} against u^{exponent:.4g} diverges"
            )
        return float(tail.c * U ** (exponent + 1.0 - tail.q) / (tail.q - exponent - 1.0))


def _fit_tail(u: FloatArray, values: FloatArray, label: str) -> TailFit:
    """Least-squares fit of the last decade to a power law and to an exponential."""
    mask = u >= u[-1] / 10.0
    if np.count_nonzero(mask) < 4:
        mask[-4:] = True
    positive = mask & (values > 0)
    if np.count_nonzero(positive) < np.count_nonzero(mask):
        # the profile has reached zero inside the last decade
        return TailFit("zero")
    x, y = u[positive], np.log(values[positive])
    fits: list[TailFit] = []
    if x[0] > 0:
        slope, intercept = np.polyfit(np.log(x), y, 1)
        residual = float(np.sqrt(np.mean((intercept + slope * np.log(x) - y) ** 2)))
        fits.append(TailFit("power", float(np.exp(intercept)), float(-slope), residual))
    slope, intercept = np.polyfit(x, y, 1)
    residual = float(np.sqrt(np.mean((intercept + slope * x - y) ** 2)))
    fits.append(TailFit("exponential", float(np.exp(intercept)), float(-slope), residual))
    best = min(fits, key=lambda fit: fit.residual)
    logger.debug(f"{label}: {best.model} tail c={best.c:.4g} q={best.q:.4g}")
    return best


def _linear_pieces(
    profile: RadialProfile,
) -> tuple[FloatArray, FloatArray, FloatArray, FloatArray]:
    """Segments [u0, u1] of the table with profile = alpha + beta u on each."""
    u0, u1 = profile.u[:-1], profile.u[1:]
    v0, v1 = profile.values[:-1], profile.values[1:]
    beta = (v1 - v0) / (u1 - u0)
    return u0, u1, v0 - beta * u0, beta


def _table_moment(profile: RadialProfile, exponent: float) -> float:
    """int_0^{u_top} u^exponent profile(u) du, exact on each linear segment."""
    u0, u1, alpha, beta = _linear_pieces(profile)
    e1, e2 = exponent + 1.0, exponent + 2.0
    pieces = alpha * (u1**e1 - u0**e1) / e1 + beta * (u1**e2 - u0**e2) / e2
    return float(np.sum(pieces))


def _table_radial_moment(profile: RadialProfile, d: int) -> float:
    """int_0^{sqrt(u_top)} s^{d+1} profile(s^2) ds, exact on each segment in s."""
    u0, u1, alpha, beta = _linear_pieces(profile)
    s0, s1 = np.sqrt(u0), np.sqrt(u1)
    pieces = (
        alpha * (s1 ** (d + 2) - s0 ** (d + 2)) / (d + 2)
        + beta * (s1 ** (d + 4) - s0 ** (d + 4)) / (d + 4)
    )
    return float(np.sum(pieces))


def profile_moment(profile: RadialProfile, exponent: float) -> float:
    """int_0^inf u^exponent profile(u) du."""
    if profile.fn is None:
        return _table_moment(profile, exponent) + profile.tail_integral(exponent)

    def integrand(u: float) -> float:
        return float(u**exponent * profile(np.array([u]))[0])

    points = [b for b in profile.breaks if 0.0 < b < profile.u_top] or None
    body, _ = quad(
        integrand,
        0.0,
        profile.u_top,
        epsabs=QUAD_ATOL,
        epsrel=QUAD_RTOL,
        limit=QUAD_LIMIT,
        points=points,
    )
    return float(body) + profile.tail_integral(exponent)


def radial_moment(profile: RadialProfile, d: int) -> float:
    """int_0^inf profile(s^2) s^{d+1} ds, integrated in s rather than u."""
    if profile.fn is None:
        return _table_radial_moment(profile, d) + 0.5 * profile.tail_integral(d / 2.0)

    def integrand(s: float) -> float:
        return float(s ** (d + 1) * profile(np.array([s * s]))[0])

    top = math.sqrt(profile.u_top)
    points = [math.sqrt(b) for b in profile.breaks if 0.0 < b < profile.u_top] or None
    body, _ = quad(
        integrand, 0.0, top, epsabs=QUAD_ATOL, epsrel=QUAD_RTOL, limit=QUAD_LIMIT, points=points
    )
    return float(body) + 0.5 * profile.tail_integral(d / 2.0)

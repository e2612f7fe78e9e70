"""Tests for the growth functionals nu, rho, |B_rho| and the growth classifiers."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from src.analysis import feller_oracle_1d
from src.coeff import (
    GrowthProfile,
    VolumeTable,
    ball_volume,
    build_preset,
    classify_growth,
    nu_profile,
    rho_distance,
    tacklind_check,
    tikhonov_check,
)
from src.coeff.growth import interval_integrals, unit_ball_volume
from src.errors import GridError, InsufficientDataError
from src.models import FellerStatus, TacklindStatus, TikhonovStatus


def _zero(t: np.ndarray) -> np.ndarray:
    return np.zeros_like(t)


def _quartic(t: np.ndarray) -> np.ndarray:
    return t**4


class TestNuProfile:
    """nu(s) is the running maximum of ||C(x)|| over spheres."""

    def test_identity(self) -> None:
        profile = nu_profile(build_preset("identity", 2), np.linspace(0, 10, 11))
        np.testing.assert_allclose(profile.nu, 1.0)

    def test_power_growth(self) -> None:
        s = np.linspace(0, 5, 21)
        profile = nu_profile(build_preset("power-growth", 1), s)
        np.testing.assert_allclose(profile.nu, (1 + s) ** 2)

    def test_degenerate_diagonal(self) -> None:
        s = np.linspace(0, 4, 17)
        profile = nu_profile(build_preset("degenerate", 2), s, angular_samples=64)
        np.testing.assert_allclose(profile.nu, np.maximum(1.0, s**2))

    def test_monotone_for_oscillating_field(self) -> None:
        profile = nu_profile(build_preset("sinusoidal", 1), np.linspace(0, 20, 81))
        assert np.all(np.diff(profile.nu) >= 0)

    def test_origin_prepended(self) -> None:
        profile = nu_profile(build_preset("identity", 1), [1.0, 2.0])
        assert profile.s_grid[0] == 0.0

    def test_rejects_unsorted_grid(self) -> None:
        with pytest.raises(GridError, match="strictly increasing"):
            nu_profile(build_preset("identity", 1), [0.0, 2.0, 1.0])


class TestRhoDistance:
    """rho(s) = int_0^s (1 + nu)^(-1/2) dt with tail extrapolation."""

    def test_zero_nu_gives_identity(self) -> None:
        s = np.linspace(0, 50, 101)
        profile = rho_distance(GrowthProfile.from_function(_zero, s))
        assert profile.rho is not None
        np.testing.assert_allclose(profile.rho, s, rtol=1e-12, atol=1e-12)
        assert profile.rho_divergent
        assert profile.rho_limit is None

    def test_logarithmic_rho(self) -> None:
        s = np.linspace(0, math.e - 1, 41)
        profile = rho_distance(GrowthProfile.from_function(lambda t: (1 + t) ** 2 - 1, s))
        assert profile.rho is not None
        assert profile.rho[-1] == pytest.approx(1.0, abs=1e-8)
        np.testing.assert_allclose(profile.rho, np.log1p(s), atol=1e-8)

    def test_quartic_nu_has_finite_limit(self) -> None:
        s = np.concatenate([[0.0], np.geomspace(1e-2, 1e3, 300)])
        profile = rho_distance(GrowthProfile.from_function(_quartic, s))
        oracle, _ = quad(lambda t: (1 + t**4) ** -0.5, 0, np.inf, epsabs=1e-13, epsrel=1e-13)
        assert not profile.rho_divergent
        assert profile.rho_limit == pytest.approx(oracle, abs=1e-6)
        assert profile.tail_q == pytest.approx(2.0, abs=1e-3)

    def test_boundary_growth_keeps_rho_divergent(self) -> None:
        """s^-1 (log s)^-1/2 decays faster than any s^-1 fit yet still integrates to infinity."""
        s = np.geomspace(1e-2, 1e3, 400)
        profile = rho_distance(nu_profile(build_preset("tikhonov-boundary", 1), s))
        assert profile.rho_divergent
        assert profile.tail_q is not None and profile.tail_q > 1.0

    def test_rho_is_one_lipschitz_and_monotone(self) -> None:
        s = np.linspace(0, 30, 121)
        profile = rho_distance(nu_profile(build_preset("tikhonov-boundary", 1), s))
        assert profile.rho is not None
        steps = np.diff(profile.rho)
        assert np.all(steps >= 0)
        assert np.all(steps <= np.diff(s) + 1e-12)
        assert profile.rho[0] == 0.0

    def test_interval_integrals_match_closed_form(self) -> None:
        edges = np.array([0.0, 1.0, 3.0, 10.0])
        pieces = interval_integrals(lambda t: 1.0 / (1.0 + t) ** 2, edges)
        expected = 1.0 / (1.0 + edges[:-1]) - 1.0 / (1.0 + edges[1:])
        np.testing.assert_allclose(pieces, expected, rtol=1e-9)


class TestBallVolume:
    """|B_rho(r)| = omega_d sigma(r)^d."""

    def test_unit_ball_volumes(self) -> None:
        assert unit_ball_volume(1) == pytest.approx(2.0)
        assert unit_ball_volume(2) == pytest.approx(math.pi)
        assert unit_ball_volume(3) == pytest.approx(4.0 * math.pi / 3.0)

    def test_free_line(self) -> None:
        profile = rho_distance(GrowthProfile.from_function(_zero, np.linspace(0, 100, 201)))
        vol = ball_volume(profile)
        np.testing.assert_allclose(vol.volume, 2.0 * vol.r_grid, rtol=1e-10)

    @pytest.mark.parametrize("d", [1, 2, 3])
    def test_constant_nu_closed_form(self, d: int) -> None:
        c = 3.0
        s = np.linspace(0, 40, 161)
        profile = rho_distance(GrowthProfile.from_function(lambda t: np.full_like(t, c), s, d=d))
        r = np.linspace(0.5, 15.0, 30)
        vol = ball_volume(profile, r)
        expected = unit_ball_volume(d) * (math.sqrt(1 + c) * r) ** d
        np.testing.assert_allclose(vol.volume, expected, rtol=1e-8)

    def test_logarithmic_rho_volume(self) -> None:
        s = np.concatenate([[0.0], np.geomspace(1e-3, 1e4, 2000)])
        profile = rho_distance(GrowthProfile.from_function(lambda t: (1 + t) ** 2 - 1, s))
        r = np.linspace(0.5, 8.0, 16)
        vol = ball_volume(profile, r)
        np.testing.assert_allclose(vol.volume, 2.0 * np.expm1(r), rtol=1e-4)

    def test_infinite_beyond_rho_limit(self) -> None:
        s = np.concatenate([[0.0], np.geomspace(1e-2, 1e3, 300)])
        profile = rho_distance(GrowthProfile.from_function(_quartic, s))
        assert profile.rho_limit is not None
        vol = ball_volume(profile, [1.0, profile.rho_limit + 0.1])
        assert np.isfinite(vol.log_volume[0])
        assert vol.infinite[1]

    def test_volume_non_decreasing(self) -> None:
        s = np.linspace(0, 200, 400)
        vol = ball_volume(rho_distance(nu_profile(build_preset("power-growth", 2), s)))
        assert np.all(np.diff(vol.log_volume) >= 0)

    def test_rejects_non_positive_radii(self) -> None:
        profile = rho_distance(GrowthProfile.from_function(_zero, np.linspace(0, 10, 11)))
        with pytest.raises(GridError, match="positive"):
            ball_volume(profile, [0.0, 1.0])


def _table(log_volume, lo: float = 1.0, hi: float = 20.0, n: int = 200) -> VolumeTable:
    return VolumeTable.from_log_volume(np.linspace(lo, hi, n), log_volume)


class TestTikhonov:
    """|B_rho(r)| <= a exp(b r^2) from a finite window."""

    def test_exponential_volume_satisfies(self) -> None:
        verdict = tikhonov_check(_table(lambda r: np.log(2.0 * np.expm1(r))))
        assert verdict.tikhonov is TikhonovStatus.SATISFIED

    def test_gaussian_volume_satisfies(self) -> None:
        verdict = tikhonov_check(_table(lambda r: 0.25 * r**2 + 1.0))
        assert verdict.tikhonov is TikhonovStatus.SATISFIED
        assert verdict.tikhonov_b == pytest.approx(0.25)

    def test_cubic_log_volume_violates(self) -> None:
        verdict = tikhonov_check(_table(lambda r: r**3))
        assert verdict.tikhonov is TikhonovStatus.VIOLATED

    def test_infinite_volume_violates(self) -> None:
        s = np.concatenate([[0.0], np.geomspace(1e-2, 1e3, 300)])
        vol = ball_volume(rho_distance(GrowthProfile.from_function(_quartic, s)))
        verdict = tikhonov_check(vol)
        assert verdict.tikhonov is TikhonovStatus.VIOLATED
        assert "infinite" in verdict.notes[0]

    def test_boundary_preset_satisfies(self) -> None:
        s = np.geomspace(1e-2, 1e3, 400)
        profile = rho_distance(nu_profile(build_preset("tikhonov-boundary", 1), s))
        verdict = classify_growth(ball_volume(profile))
        assert verdict.tikhonov is TikhonovStatus.SATISFIED
        assert verdict.tacklind is TacklindStatus.DIVERGENT

    def test_too_few_samples(self) -> None:
        with pytest.raises(InsufficientDataError, match="needs 8 samples"):
            tikhonov_check(_table(lambda r: r, n=10))


class TestTacklind:
    """Partial integrals of r / log|B_rho(r)| on a doubling sequence."""

    def test_quadratic_diverges(self) -> None:
        verdict = tacklind_check(_table(lambda r: r**2, 2.0, 100.0), 2.0, 100.0)
        assert verdict.tacklind is TacklindStatus.DIVERGENT
        assert verdict.tail_exponent == pytest.approx(2.0, abs=1e-6)

    def test_quadratic_log_diverges(self) -> None:
        verdict = tacklind_check(_table(lambda r: r**2 * np.log(r), 2.0, 100.0), 2.0, 100.0)
        assert verdict.tacklind is TacklindStatus.DIVERGENT

    @pytest.mark.parametrize("p", [2.3, 2.4])
    def test_slightly_superquadratic_converges(self, p: float) -> None:
        verdict = tacklind_check(_table(lambda r: r**p, 2.0, 100.0), 2.0, 100.0)
        assert verdict.tacklind is TacklindStatus.CONVERGENT
        assert verdict.tail_exponent == pytest.approx(p, abs=1e-6)

    def test_quadratic_log_is_resolved(self) -> None:
        verdict = tacklind_check(_table(lambda r: r**2 * np.log(r), 2.0, 100.0), 2.0, 100.0)
        assert verdict.tail_exponent == pytest.approx(2.0, abs=1e-6)
        assert verdict.log_exponent == pytest.approx(1.0, abs=1e-6)

    def test_near_critical_without_log_fit_is_inconclusive(self) -> None:
        verdict = tacklind_check(_table(lambda r: r**2.05, 1.2, 2.6, 40), 1.2, 2.6)
        assert verdict.log_exponent is None
        assert verdict.tacklind is TacklindStatus.INCONCLUSIVE

    def test_cubic_converges(self) -> None:
        verdict = tacklind_check(_table(lambda r: r**3, 2.0, 100.0), 2.0, 100.0)
        assert verdict.tacklind is TacklindStatus.CONVERGENT
        assert verdict.tail_exponent == pytest.approx(3.0, abs=1e-6)

    def test_polynomial_volume_diverges(self) -> None:
        verdict = tacklind_check(_table(lambda r: 3.0 * np.log(r), 2.0, 100.0), 2.0, 100.0)
        assert verdict.tacklind is TacklindStatus.DIVERGENT

    def test_partial_integrals_of_harmonic_tail(self) -> None:
        verdict = tacklind_check(_table(lambda r: r**2, 2.0, 100.0), 2.0, 100.0)
        (t0, i0), (t1, i1) = verdict.partial_integrals[0], verdict.partial_integrals[-1]
        assert i1 - i0 == pytest.approx(math.log(t1 / t0), rel=1e-9)

    def test_infinite_volume_is_convergent_with_note(self) -> None:
        log_volume = np.where(np.linspace(2, 50, 100) > 30, np.inf, 1.0)
        vol = VolumeTable(np.linspace(2, 50, 100), log_volume)
        verdict = tacklind_check(vol, 2.0, 50.0)
        assert verdict.tacklind is TacklindStatus.CONVERGENT
        assert "does not apply" in verdict.notes[0]

    def test_log_volume_must_be_positive(self) -> None:
        with pytest.raises(InsufficientDataError, match="must exceed 1"):
            tacklind_check(_table(lambda r: np.log(r), 0.5, 10.0), 0.5, 10.0)


@pytest.mark.parametrize(
    "log_volume",
    [
        lambda r: np.log(2.0 * np.expm1(r)),
        lambda r: 0.25 * r**2 + 1.0,
        lambda r: r**2 * np.log(r),
        lambda r: r**3,
        lambda r: 3.0 * np.log(r),
        lambda r: r**1.5,
    ],
)
def test_tikhonov_satisfied_implies_tacklind_divergent(log_volume) -> None:
    """The reconciled verdict never pairs a satisfied Tikhonov with a non-divergent Tacklind."""
    verdict = classify_growth(_table(log_volume, 2.0, 60.0))
    assert verdict.consistent


@pytest.mark.parametrize("p", [1.0, 2.0, 2.4, 3.0])
def test_power_growth_agrees_with_feller(p: float) -> None:
    """(1 + |x|)^p: rho(inf) is finite and the Tacklind integral converges exactly when p > 2."""
    field = build_preset("power-growth", 1, {"p": p})
    feller = feller_oracle_1d(field.entries[0])
    explosive = feller.status is FellerStatus.EXPLOSIVE
    assert explosive == (p > 2.0)
    profile = rho_distance(nu_profile(field, np.geomspace(1e-2, 1e3, 400)))
    assert profile.rho_divergent is not explosive
    verdict = classify_growth(ball_volume(profile))
    if explosive:
        assert verdict.tacklind is TacklindStatus.CONVERGENT
    else:
        assert verdict.tacklind is not TacklindStatus.CONVERGENT

"""Ellipticity constants from kernel envelope profiles via their second moments."""

from typing import NamedTuple

from src.analysis.profiles import RadialProfile, profile_moment, radial_moment, sphere_area
from src.errors import DivergentMomentError, EnvelopeError
from src.logging_config import get_logger
from src.models import EllipticityEstimate, Provenance

logger = get_logger("analysis.recover")


class MomentForms(NamedTuple):
    """(2d)^-1 int profile(|x|^2) |x|^2 dx, integrated in s = |x| and in u = |x|^2."""

    radial: float
    volume: float

    @property
    def relative_gap(self) -> float:
        scale = max(abs(self.radial), abs(self.volume))
        return abs(self.radial - self.volume) / scale if scale else 0.0


def moment_forms(profile: RadialProfile, d: int) -> MomentForms:
    prefactor = sphere_area(d) / (2.0 * d)
    return MomentForms(
        radial=prefactor * radial_moment(profile, d),
        volume=prefactor * 0.5 * profile_moment(profile, d / 2.0),
    )


def recover_mu(rho: RadialProfile, d: int) -> EllipticityEstimate:
    """mu = (2d)^-1 S_{d-1} int_0^inf rho(s^2) s^{d+1} ds for the lower profile rho."""
    if rho.is_zero():
        raise EnvelopeError("lower profile is identically zero: no mu can be recovered")
    forms = moment_forms(rho, d)
    logger.debug(f"mu: radial {forms.radial:.12g}, volume form {forms.volume:.12g}")
    if not forms.radial > 0:
        raise EnvelopeError(f"lower profile has non-positive moment {forms.radial}")
    return EllipticityEstimate(mu=forms.radial, provenance=Provenance.RECOVERED)


def recover_lambda(sigma: RadialProfile, d: int, a_factor: float = 1.0) -> EllipticityEstimate:
    """lambda = a_factor (2d)^-1 S_{d-1} int_0^inf sigma(s^2) s^{d+1} ds for the upper profile."""
    try:
        forms = moment_forms(sigma, d)
    except DivergentMomentError:
        logger.warning("upper profile moment diverges; lambda is unbounded")
        raise
    if not forms.radial > 0:
        raise EnvelopeError("upper profile is identically zero")
    return EllipticityEstimate(lambda_=a_factor * forms.radial, provenance=Provenance.RECOVERED)

"""Kernel envelopes, recovered ellipticity constants, oscillation limits and the Feller oracle."""

from .envelope import (
    EnvelopeWindow,
    ProfilePair,
    envelope_to_profiles,
    fit_gaussian_envelope,
    fit_profile_envelope,
)
from .feller import feller_oracle_1d
from .oscillation import OscillationTable, oscillation_extract
from .profiles import RadialProfile
from .recover import moment_forms, recover_lambda, recover_mu

__all__ = [
    "EnvelopeWindow",
    "OscillationTable",
    "ProfilePair",
    "RadialProfile",
    "envelope_to_profiles",
    "feller_oracle_1d",
    "fit_gaussian_envelope",
    "fit_profile_envelope",
    "moment_forms",
    "oscillation_extract",
    "recover_lambda",
    "recover_mu",
]

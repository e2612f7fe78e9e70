"""Coefficient fields: expressions, validation, ellipticity scans and growth functionals."""

from .expr import ScalarFieldExpr, parse_expression
from .field import CoefficientField, constant_field, ellipticity_scan, eval_matrix
from .growth import (
    GrowthProfile,
    VolumeTable,
    ball_volume,
    classify_growth,
    nu_profile,
    rho_distance,
    tacklind_check,
    tikhonov_check,
)
from .presets import build_preset, preset_catalog

__all__ = [
    "CoefficientField",
    "GrowthProfile",
    "ScalarFieldExpr",
    "VolumeTable",
    "ball_volume",
    "build_preset",
    "classify_growth",
    "constant_field",
    "ellipticity_scan",
    "eval_matrix",
    "nu_profile",
    "parse_expression",
    "preset_catalog",
    "rho_distance",
    "tacklind_check",
    "tikhonov_check",
]

"""Semigroup action, kernels, conservation defects and weighted estimates."""

from .epsilon import EpsilonFamilyReport, epsilon_family_compare
from .evolve import (
    EvolveReport,
    KernelSlice,
    evolve,
    extract_kernel,
    ground_state,
    kernel_symmetry_defect,
    mass_defect,
)
from .gaffney import LipschitzWeight, clipped_distance_weight, davies_gaffney_check

__all__ = [
    "EpsilonFamilyReport",
    "EvolveReport",
    "KernelSlice",
    "LipschitzWeight",
    "clipped_distance_weight",
    "davies_gaffney_check",
    "epsilon_family_compare",
    "evolve",
    "extract_kernel",
    "ground_state",
    "kernel_symmetry_defect",
    "mass_defect",
]

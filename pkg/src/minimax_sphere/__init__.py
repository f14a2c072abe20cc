"""Minimax spherical designs: energies, exact and optimized designs, partitions, QMC and L1-PCA."""
from ._kernels import BACKEND as KERNEL_BACKEND
from .core import (
    Configuration,
    EnergyReport,
    EnumerationInfeasible,
    SignPattern,
    UnitVector,
    combination_vector,
    energy,
    energy_lower_bound_sampled,
)

__version__ = "0.1.0"

__all__ = [
    "KERNEL_BACKEND",
    "Configuration",
    "EnergyReport",
    "EnumerationInfeasible",
    "SignPattern",
    "UnitVector",
    "combination_vector",
    "energy",
    "energy_lower_bound_sampled",
]

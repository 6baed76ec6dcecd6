"""Spectral stability and bifurcation analysis of curved-channel (Dean) flow."""

from .geometry import FluidParameters, GeometryError, profile_constants, lambda_parameter
from .spectral_basis import Branch, ModeIndex, SpectralField, truncation_modes
from .linear_stability import CriticalPoint, DegenerateCriticalPoint, critical_point, pes_check
from .nonlinear_reduction import GammaNonPositive, InteractionTensor, gamma_coefficient
from .dynamics import BlowUpError, SimulationConfig, assemble, integrate, steady_state

__version__ = "0.1.0"

__all__ = [
    "FluidParameters", "GeometryError", "profile_constants", "lambda_parameter",
    "Branch", "ModeIndex", "SpectralField", "truncation_modes",
    "CriticalPoint", "DegenerateCriticalPoint", "critical_point", "pes_check",
    "GammaNonPositive", "InteractionTensor", "gamma_coefficient",
    "BlowUpError", "SimulationConfig", "assemble", "integrate", "steady_state",
]

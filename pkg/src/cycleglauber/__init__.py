"""Spectral gap of heat-bath Glauber dynamics for the ferromagnetic Ising cycle."""

from .cycle_model import CouplingVector, SpinConfiguration, new_couplings
from .errors import CycleGlauberError
from .spectral import SpectralResult, solve

__all__ = ["CouplingVector", "SpinConfiguration", "new_couplings", "CycleGlauberError",
           "SpectralResult", "solve"]
__version__ = "0.1.0"

"""Importance sampling of exit probabilities for small-noise linear SPDEs."""

from .controls import SchemeConfig
from .dynamics import SimConfig, simulate
from .spectral import SpectralModel, preset

__version__ = "0.1.0"

__all__ = ["SchemeConfig", "SimConfig", "SpectralModel", "preset", "simulate", "__version__"]

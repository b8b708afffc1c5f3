"""Nonlinear P/S wave interactions in the five-constant elastic model."""

from .medium import ConstantMedium, MaterialPoint, wave_speeds

__all__ = ["ConstantMedium", "MaterialPoint", "wave_speeds"]
__version__ = "0.1.0"

"""Numerical laboratory for bilinear Bochner-Riesz multipliers."""

__version__ = "0.1.0"

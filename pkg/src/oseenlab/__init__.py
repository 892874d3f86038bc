"""Numerical laboratory for anisotropically weighted Oseen decay estimates."""

__version__ = "0.1.0"

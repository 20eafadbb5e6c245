"""Multipatch spline de Rham sequences with local commuting projections."""
__version__ = "0.1.0"

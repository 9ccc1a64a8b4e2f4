"""Nonlinear spline membrane solver with implicit wrinkling via tension fields."""

from .splines import (
    KnotVector,
    QuadratureRule,
    SplineSurface,
    benchmark_geometry,
    make_uniform_knots,
)
from .materials import MaterialModel
from .wrinkling import TensionState

__all__ = [
    "KnotVector",
    "QuadratureRule",
    "SplineSurface",
    "benchmark_geometry",
    "make_uniform_knots",
    "MaterialModel",
    "TensionState",
]

__version__ = "0.1.0"

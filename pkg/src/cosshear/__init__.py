"""Geometrically nonlinear Cosserat simple shear in one dimension."""

from .state import Grid, Params, ShearState, make_grid

__version__ = "0.1.0"

__all__ = ["Grid", "Params", "ShearState", "make_grid", "__version__"]

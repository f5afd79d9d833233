"""Spectral solver, Littlewood-Paley norms and inequality lab for
incompressible neo-Hookean elastodynamics on the periodic box."""

from .grid import Grid, SpectralField, VectorField, make_grid

__version__ = "0.1.0"

__all__ = ["Grid", "SpectralField", "VectorField", "make_grid", "__version__"]

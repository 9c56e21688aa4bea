"""Pseudospectral simulation and temperature-only control synthesis for
Boussinesq flow in a periodic channel."""

__version__ = "0.1.0"

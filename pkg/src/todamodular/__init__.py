"""Exact verification engine for the modular hierarchy of the finite Toda lattice."""

__version__ = "0.1.0"

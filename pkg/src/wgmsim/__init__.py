"""Entanglement dynamics of dipole-coupled two-level atoms around a two-mode microtoroidal cavity."""

__version__ = "0.1.0"

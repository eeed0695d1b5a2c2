"""Numerical laboratory for ground states of the 1D NLS with a potential."""

__version__ = "0.1.0"

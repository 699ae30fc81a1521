"""Numerical laboratory for linear and nonlinear waves on Kerr-de Sitter."""

__version__ = "0.1.0"

"""Numerical toolkit for Frobenius von Neumann k-algebras and fusion rings."""

__version__ = "0.1.0"

"""Toolkit for Toeplitz-type ordered Bratteli diagrams and their eigenvalues."""

__version__ = "0.1.0"

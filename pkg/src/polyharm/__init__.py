"""Cayley balls, discrete harmonic functions and dimension estimates for groups of polynomial growth."""

__version__ = "0.1.0"

"""Numerical laboratory for the 1-D stochastic heat equation with space-time white noise."""

__version__ = "0.1.0"

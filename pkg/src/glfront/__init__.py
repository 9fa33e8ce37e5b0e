"""Numerical laboratory for critical-front stability in the Ginzburg-Landau equation."""

__version__ = "0.1.0"

"""Periods, monodromy and lattice tools for Picard-Fuchs operators."""

__version__ = "0.1.0"

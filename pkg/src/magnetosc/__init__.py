"""Charged particle in a time-varying magnetic field, reduced to two decoupled oscillators."""

__version__ = "0.1.0"

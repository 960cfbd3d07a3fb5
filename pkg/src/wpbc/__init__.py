"""Simulation and analysis of wirelessly powered backscatter networks."""

__version__ = "0.1.0"

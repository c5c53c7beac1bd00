"""Stabilized-cat ancilla simulations for syndrome extraction."""

__version__ = "0.1.0"

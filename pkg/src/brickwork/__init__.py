"""Quantum channels along the causal lightcone of brickwork circuits."""

__version__ = "0.1.0"

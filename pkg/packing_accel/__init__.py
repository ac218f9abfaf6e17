"""
packing-accel - Sample-and-threshold acceleration for packing LPs

Solves a small sampled packing LP with a pluggable solver, thresholds every
original variable to {0,1} with the sample's dual prices, and measures the
speed/quality trade-off against a full solve.
"""

__version__ = "0.1.0"
__all__ = []

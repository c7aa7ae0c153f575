"""Jacobi tensors, gauge-generated compatible structures and integral chains."""

__version__ = "0.1.0"

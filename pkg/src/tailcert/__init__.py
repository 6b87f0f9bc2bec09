"""Variational tail bounds for norms of random vectors and matrices."""

__version__ = "0.1.0"

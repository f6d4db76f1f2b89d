"""Finite-volume solver and verification lab for u_t = Laplacian(phi(u)) on boxes with zero-flux walls."""

__version__ = "0.1.0"

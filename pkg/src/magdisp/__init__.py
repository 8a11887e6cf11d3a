"""Propagator kernels for the fourth-order magnetic Schroedinger operator in 2D."""

__version__ = "0.1.0"

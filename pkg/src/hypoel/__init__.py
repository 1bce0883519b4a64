"""Numerical laboratory for hypoelliptic smoothing of degenerate backward equations."""

__version__ = "0.1.0"

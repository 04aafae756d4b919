"""Kinetically constrained models on bootstrap percolation families."""

__version__ = "0.1.0"

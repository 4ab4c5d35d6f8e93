"""Percolation on hyperbolic {p,q} tilings: patches, isometries, clusters and end boundaries."""

__version__ = "0.1.0"

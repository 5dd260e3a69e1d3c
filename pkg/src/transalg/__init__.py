"""Computational tools for transitive Lie algebroids over the 2-sphere."""

__version__ = "0.1.0"

"""Exact computations in the measure algebra of the circle group."""

__version__ = "0.1.0"

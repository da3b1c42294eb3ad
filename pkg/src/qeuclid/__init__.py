"""Exact symbolic engine for q-deformed Euclidean spaces and their quantum groups."""

__version__ = "0.1.0"

"""Exact and high-precision computation of heights of mixed motives."""

__version__ = "0.1.0"

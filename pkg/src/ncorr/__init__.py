"""Nonclassicality tests for normally and time-ordered field correlations."""

__version__ = "0.1.0"

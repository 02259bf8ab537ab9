"""Retrosynthesis planning with ensemble plausibility filtering."""

__version__ = "0.1.0"

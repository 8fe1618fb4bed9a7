"""Expected possession value models for rugby league event data."""

__version__ = "0.1.0"

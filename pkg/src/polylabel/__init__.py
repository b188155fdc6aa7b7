"""Algebraically defined edge-labelings: encodings, constructions and counts."""

__version__ = "0.1.0"

"""Singlet-triplet qubit gate simulator near the transverse sweet spot."""

__version__ = "0.3.0"

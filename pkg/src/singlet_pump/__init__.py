"""Dissipative preparation of a two-ion singlet by collective optical pumping."""

__version__ = "0.1.0"

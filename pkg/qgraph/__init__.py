"""Spectra and trace formulae of quantum graphs."""

__version__ = "0.1.0"

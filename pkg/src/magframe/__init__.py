"""Magnetic Gabor-frame matrices of magnetic pseudo-differential operators."""

__version__ = "0.1.0"

"""Spectral analysis of the PT-symmetric square well with two imaginary point interactions."""

__version__ = "0.1.0"

"""Soliton addition for the KP-II equation through Miura maps and heat kernels."""

__version__ = "0.1.0"

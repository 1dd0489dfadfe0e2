"""Spectra of the quadratic pencil -d^2/dx^2 + V + i eps lambda gamma + kappa* - lambda^2."""
__version__ = "0.1.0"

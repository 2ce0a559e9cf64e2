"""Bernstein-type inequalities for radial basis function networks, made computable."""

__version__ = "0.1.0"

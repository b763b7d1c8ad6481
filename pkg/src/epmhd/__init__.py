"""Stationary incompressible MHD with exact-penalty magnetic divergence
control, plus an adjoint-based quantity-of-interest error estimator."""

__version__ = "0.1.0"

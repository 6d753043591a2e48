"""Nonlinear functionals of quantum states from multicopy measurements and structural physical approximations."""

__version__ = "0.1.0"

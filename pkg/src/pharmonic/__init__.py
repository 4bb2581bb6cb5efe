"""Discrete p-harmonic measures of planar convex bodies and an L_q Minkowski solver."""
from ._accel import backend
from .errors import ConvergenceError, InputOutputError, PharmonicError, ValidationError

__version__ = "0.1.0"

__all__ = ["backend", "PharmonicError", "ValidationError", "ConvergenceError", "InputOutputError", "__version__"]

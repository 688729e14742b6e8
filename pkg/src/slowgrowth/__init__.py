"""Polynomial volume growth of symplectic maps, twist dynamics and Floer-rank combinatorics."""

__version__ = "0.1.0"

from ._backend import BACKEND
from .errors import DegenerateTimeError, DomainError, NumericalError, UnsupportedModelError

__all__ = ["BACKEND", "DegenerateTimeError", "DomainError", "NumericalError",
           "UnsupportedModelError", "__version__"]

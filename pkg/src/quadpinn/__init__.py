"""Physics-informed neural solvers with Gaussian-quadrature integral operators."""

from ._backend import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]

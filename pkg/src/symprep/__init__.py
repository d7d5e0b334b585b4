"""Symmetry-preserving state-preparation circuits for VQE."""
from ._backend import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND"]

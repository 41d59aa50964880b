"""Flexibility analysis of Kokotsakis polyhedra with quadrangular base."""

from .config import DEFAULT_TOL, Tolerances

__all__ = ["DEFAULT_TOL", "Tolerances"]
__version__ = "0.1.0"

"""Lowest Robin eigenvalue in the exterior of compact sets."""

__version__ = "0.1.0"

from .errors import (  # noqa: F401
    AccuracyError,
    ConvexityError,
    DomainError,
    ExtRobinError,
    GeometryError,
    GeometryParseError,
    GridError,
    InequalityViolation,
    SolverError,
    StateError,
)

"""Exception hierarchy shared by all extrobin modules."""


class ExtRobinError(Exception):
    """Base class for every error raised by the package."""


class DomainError(ExtRobinError, ValueError):
    """An argument lies outside the domain of the operation."""


class AccuracyError(ExtRobinError, ArithmeticError):
    """An iterative evaluation did not reach the requested tolerance.

    The best available estimate is kept on ``best_estimate``.
    """

    def __init__(self, message, best_estimate=None):
        super().__init__(message)
        self.best_estimate = best_estimate


class StateError(ExtRobinError):
    """The operation is not defined for the given solver state."""


class GeometryError(ExtRobinError, ValueError):
    """Invalid curve or body: irregular, self-intersecting, overlapping."""


class ConvexityError(GeometryError):
    """A convexity precondition is violated."""


class GridError(ExtRobinError, ValueError):
    """A discretisation grid is degenerate (e.g. non-positive metric factor)."""


class SolverError(ExtRobinError, RuntimeError):
    """An eigensolver failed after exhausting its retries."""


class InequalityViolation(ExtRobinError):
    """An inequality that must hold was violated beyond tolerance."""


class GeometryParseError(ExtRobinError, ValueError):
    """Malformed geometry/config file; ``lineno`` is 1-based (0 if unknown)."""

    def __init__(self, message, lineno=0):
        where = f"line {lineno}: " if lineno else ""
        super().__init__(where + message)
        self.lineno = lineno

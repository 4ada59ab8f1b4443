"""Exception types raised across the package."""

__all__ = [
    "GraphflowError",
    "GraphError",
    "NonlinearityError",
    "SolverError",
    "ExhaustionError",
    "DiscretizationError",
    "ConfigError",
]


class GraphflowError(Exception):
    """Base class for all package errors."""


class GraphError(GraphflowError):
    """Invalid graph data or an operation on nodes the graph does not have."""


class NonlinearityError(GraphflowError):
    """Nonlinearity fails its declared class or an admissibility condition."""


class SolverError(GraphflowError):
    """Iterative solve failed to reach the requested tolerance."""


class ExhaustionError(GraphflowError):
    """Exhaustion of the host graph failed or did not converge."""


class DiscretizationError(GraphflowError):
    """Invalid time partition or refinement budget exhausted."""


class ConfigError(GraphflowError):
    """Malformed configuration, spec string, or data field."""

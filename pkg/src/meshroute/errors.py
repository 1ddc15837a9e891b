"""Exception types raised across the package."""


class MeshRouteError(Exception):
    """Base class for every error raised by meshroute."""


class ParameterError(MeshRouteError, ValueError):
    """An argument is outside its documented domain."""


class ConsistencyError(MeshRouteError):
    """Internal inconsistency, e.g. a route that does not follow real edges.

    Seeing one of these means a bug, not bad user input.
    """


class InsufficientAnchorsError(MeshRouteError):
    """Fewer than three usable gateways for localization."""


class NoAnchorError(MeshRouteError):
    """A gateway has no known route to any node."""


class NumericError(MeshRouteError, ArithmeticError):
    """A numerical routine received non-finite data or failed to factorize."""

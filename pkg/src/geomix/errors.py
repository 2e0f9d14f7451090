"""Exception types raised across the package."""


class GeomixError(Exception):
    """Base class for all package errors."""


class ConfigError(GeomixError, ValueError):
    """Invalid parameters (non-positive volume, M <= 10/3, bad dimension...)."""


class EmptyGraph(GeomixError):
    pass


class NoEdges(GeomixError):
    pass


class EmptySet(GeomixError, ValueError):
    pass


class EmptyOrFull(GeomixError, ValueError):
    """Conductance is undefined for the empty set and the full vertex set."""


class TooLarge(GeomixError):
    """Exact routine refused because the graph exceeds its size cap."""


class DimensionMismatch(GeomixError, ValueError):
    pass


class Disconnected(GeomixError):
    pass


class NoConvergence(GeomixError):
    """Iterative eigensolver stopped early.

    Attributes
    ----------
    estimate : float
        Best eigenvalue estimate at exit.
    residual : float
        Residual norm of that estimate.
    """

    def __init__(self, message, estimate, residual):
        super().__init__(message)
        self.estimate = estimate
        self.residual = residual

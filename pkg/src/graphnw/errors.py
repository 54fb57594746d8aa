"""Exception types shared across the package."""


class GraphNWError(Exception):
    """Base class for errors raised by graphnw."""


class DataError(GraphNWError, ValueError):
    """Malformed input: bad network, dimension mismatch, invalid config."""


class SupportError(DataError):
    """The kernel assigns zero weight to every observation at a query point."""

    def __init__(self, message, query=None):
        super().__init__(message)
        self.query = query


class ConvergenceError(GraphNWError, ArithmeticError):
    """An iterative solver hit its iteration budget before reaching tolerance.

    ``best`` holds the best iterate found and ``residual`` its KKT residual.
    """

    def __init__(self, message, best=None, residual=None, iterations=None):
        super().__init__(message)
        self.best = best
        self.residual = residual
        self.iterations = iterations

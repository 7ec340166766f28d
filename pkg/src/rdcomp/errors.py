"""Exception types raised by the solvers and the command-line front end."""


class RdcompError(Exception):
    """Base class for all package errors."""


class ConfigurationError(RdcompError, ValueError):
    """Invalid grid, model, tolerance or run configuration."""


class GridMismatchError(RdcompError, ValueError):
    """A field does not live on the grid it was paired with."""


class PreconditionError(RdcompError, ValueError):
    pass


class SolverError(RdcompError, RuntimeError):
    """An iterative method failed to converge.

    ``residual`` carries the last residual norm reached, when known.
    """

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class InternalError(RdcompError, RuntimeError):
    """An invariant of an iteration was violated (e.g. coupling constant too small)."""


class ModelError(RdcompError, ValueError):
    pass


class ConditionError(RdcompError, ValueError):
    """A sufficient condition cannot be evaluated (e.g. a vanishing denominator)."""


class BracketError(RdcompError, ValueError):
    pass


class StabilityError(RdcompError, RuntimeError):
    pass

"""Exception hierarchy shared across the package."""


class AvgMarginError(Exception):
    """Base class for all errors raised by avgmargin."""


class InvalidInputError(AvgMarginError, ValueError):
    """Input violates a documented precondition (shape, range, label set)."""


class ModelFormatError(AvgMarginError, ValueError):
    """A serialized model document could not be parsed."""


class UnknownVersionError(ModelFormatError):
    pass


class InvariantViolationError(ModelFormatError):
    pass


class ConvergenceError(AvgMarginError):
    """Iterative solver stopped before reaching its tolerance.

    ``best`` carries the best iterate found so callers can inspect or reuse it.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class InfeasibleError(AvgMarginError):
    """The feasible set of a dual problem is empty."""


class DivergenceError(AvgMarginError):
    """Training objective is unbounded below or became non-finite."""


class MissingCentroidError(InvalidInputError):
    pass


class UndefinedDirectionError(InvalidInputError):
    """Robust error of a linear model with zero weight vector."""


class DataFormatError(AvgMarginError, ValueError):
    """Malformed IDX file or missing digits."""


class ChecksumError(AvgMarginError):
    pass


class FetchError(AvgMarginError, OSError):
    pass


class ConfigError(AvgMarginError, ValueError):
    pass

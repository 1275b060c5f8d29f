"""Exception hierarchy shared across the package."""


class TdaError(Exception):
    """Base class for all package errors."""


class DegenerateDataError(TdaError):
    """A marker is constant within a class, or a class is too small to fit."""


class NonConvergenceError(TdaError):
    """Raised by callers that require a converged fit."""


class UnsupportedFamilyError(TdaError):
    pass


class AllMissingError(TdaError):
    pass


class EmptySubsetError(TdaError):
    pass


class NumericalFailureError(TdaError):
    pass


class BracketError(TdaError):
    """Quantile bracket could not be established."""


class TooManyFailuresError(TdaError):
    pass


class InsufficientDataError(TdaError):
    pass


class TooManyMarkersError(TdaError):
    pass


class SingularCovarianceError(TdaError):
    pass


class DataFormatError(TdaError):
    """Input file does not follow the expected CSV layout."""

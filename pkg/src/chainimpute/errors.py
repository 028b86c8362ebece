"""Exception hierarchy shared by every module of the package."""


class ImputeError(Exception):
    """Base class for all errors raised by chainimpute."""


class ConfigurationError(ImputeError, ValueError):
    pass


class ShapeError(ImputeError, ValueError):
    pass


class DataError(ImputeError, ValueError):
    """Non-finite or otherwise malformed numeric input."""


class UnimputableColumnError(ImputeError):
    def __init__(self, column):
        super().__init__(f"column {column!r} has no observed cells and cannot be imputed")
        self.column = column


class InsufficientDataError(ImputeError):
    pass


class DegenerateLabelError(ImputeError):
    pass


class NormalizationError(ImputeError):
    pass


class StratificationError(ImputeError):
    pass


class CoverageError(ImputeError):
    def __init__(self, message, missing=()):
        super().__init__(message)
        self.missing = list(missing)


class BudgetError(ImputeError):
    pass


class VersionMismatchError(ImputeError):
    pass


class DatasetError(ImputeError):
    pass

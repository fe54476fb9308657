"""Exception types raised across the package."""


class QSPrepError(Exception):
    """Base class for every error raised by qsprep."""


class InvalidInputError(QSPrepError, ValueError):
    pass


class InvalidParameterError(QSPrepError, ValueError):
    pass


class InvalidIndexError(QSPrepError, IndexError):
    pass


class InvalidIntervalError(InvalidIndexError):
    pass


class RenormalizationError(QSPrepError, ArithmeticError):
    """A measured branch carried too little norm to be renormalized."""


class SizeLimitError(QSPrepError, ValueError):
    pass


class WeightsFormatError(QSPrepError, ValueError):
    """Raised when a weights file cannot be parsed.

    Carries the offending 1-based line number in ``lineno``.
    """

    def __init__(self, message: str, lineno: int | None = None):
        super().__init__(message if lineno is None else f"line {lineno}: {message}")
        self.lineno = lineno


class ConfigError(QSPrepError, ValueError):
    pass

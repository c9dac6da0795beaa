"""Exception hierarchy shared by every stage of the engine.

Each class carries the CLI exit code it maps to.
"""


class AamsError(Exception):
    exit_code = 3


class ConfigurationError(AamsError, ValueError):
    """Bad user-supplied knob (stroke count, betas, patch size, ...)."""

    exit_code = 2


class DimensionError(AamsError, ValueError):
    exit_code = 3


class ValidationError(AamsError, ValueError):
    """Input violates a documented precondition."""

    exit_code = 3

    def __init__(self, message, names=()):
        super().__init__(message)
        self.names = tuple(names)


class FormatError(AamsError, ValueError):
    """Malformed weight file or image."""

    exit_code = 3


class NumericalError(AamsError, ArithmeticError):
    exit_code = 4

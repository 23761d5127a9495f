"""Exception types raised across the package."""


class FolkloreError(Exception):
    """Base class for all package errors."""


class InvalidInputError(FolkloreError, ValueError):
    """An argument has the wrong shape, is non-finite, or violates a bound."""


class ConfigError(FolkloreError, ValueError):
    """A learner or experiment configuration is invalid."""


class NumericalError(FolkloreError, ArithmeticError):
    """A linear-algebra step failed or produced non-finite values."""


class ProtocolError(FolkloreError, RuntimeError):
    """Calls arrived out of the predict/observe order a learner expects."""

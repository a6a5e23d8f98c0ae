"""Exception hierarchy shared by every module."""


class JcasError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(JcasError, ValueError):
    """Matrix or vector shapes are incompatible."""


class DomainError(JcasError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class NumericalError(JcasError, RuntimeError):
    """A numerical procedure failed to converge or produced an invalid result."""


class ConfigError(JcasError, ValueError):
    """A scenario configuration could not be parsed or validated."""

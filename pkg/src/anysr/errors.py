"""Exception taxonomy shared across the package."""


class AnySRError(Exception):
    """Base class for all package errors."""


class ShapeError(AnySRError, ValueError):
    """Operand dimensions are inconsistent with the operation's contract."""


class ConfigError(AnySRError, ValueError):
    """A configuration value violates an invariant (bad key, range, type)."""


class NumericError(AnySRError, ArithmeticError):
    """A computation produced NaN/Inf or was asked to run on non-finite data."""


class DataError(AnySRError, ValueError):
    """Input data (files, images, datasets) is missing, corrupt, or unusable."""

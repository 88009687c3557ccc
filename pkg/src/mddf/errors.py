"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2, DataError (and
subclasses) -> 3, anything else -> 4.
"""


class MddfError(Exception):
    """Base class for all package errors."""


class ConfigError(MddfError):
    """Invalid hyperparameter or configuration value."""


class DataError(MddfError):
    """Malformed, missing, or inconsistent input data."""


class DimensionError(DataError):
    """Input width does not match what a fitted model expects."""


class ModelFormatError(DataError):
    """Model file is corrupt, truncated, or has an unsupported version."""

"""Exception types shared across the package.

Three categories so the CLI can map failures to distinct exit codes:
bad invocation (2), bad data (3), numerical breakdown (4).
"""


class RefinedError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(RefinedError):
    """Invalid configuration or argument values (CLI exit code 2)."""


class DataError(RefinedError):
    """Malformed, inconsistent, or insufficient input data (CLI exit code 3)."""


class NumericError(RefinedError):
    """Numerical degeneracy: singular systems, undefined denominators,
    non-finite intermediates (CLI exit code 4)."""

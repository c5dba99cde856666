"""Exception hierarchy shared across the package.

The CLI maps these onto distinct exit codes, so raising the right class
matters more than the message wording.
"""


class PatchwatchError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(PatchwatchError):
    """Invalid configuration: bad dimensions, unknown modes, bad flag values."""


class DataError(PatchwatchError):
    """Unusable input data: missing files, malformed frames, size mismatches."""


class NumericError(PatchwatchError):
    """Numeric contract violation: non-finite values, degenerate statistics."""

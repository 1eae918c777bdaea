"""Exception hierarchy shared by the library and the CLI.

The CLI maps these onto exit codes (see ``logitshift.cli``): configuration
problems exit 2, unreadable or malformed data exits 3, and degenerate inputs
(e.g. a supervised fit requested on single-class data) exit 4.
"""


class LogitShiftError(ValueError):
    """Base class for all errors raised by this package."""


class ConfigError(LogitShiftError):
    """Invalid configuration: unknown method, size out of range, bad flag."""


class DataFormatError(LogitShiftError):
    """Unparseable or invalid input data (bad row, non-finite logit)."""


class DegenerateDataError(LogitShiftError):
    """Structurally valid data that cannot support the requested operation,
    such as a single-class sample passed to a supervised calibrator."""

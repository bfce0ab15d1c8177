"""Exception hierarchy shared by all mxemu modules.

The CLI maps these onto stable exit codes: DataError -> 1,
TensorFileError (and OSError) -> 2, ConfigError -> 3.
"""


class MxemuError(Exception):
    """Base class for all mxemu errors."""


class ConfigError(MxemuError):
    """Invalid configuration: unknown names, bad group sizes, shape mismatches."""


class DataError(MxemuError):
    """Invalid numeric input: NaN/Inf elements, empty data where values are required."""


class TensorFileError(MxemuError):
    """Malformed tensor container file."""

"""Exception hierarchy shared by all sddkit modules."""


class SddError(Exception):
    """Base class for all sddkit errors."""


class ShapeError(SddError):
    """Invalid or mismatched array shape."""


class ParameterError(SddError):
    """Parameter outside its valid range or an invalid call contract."""


class NumericError(SddError):
    """Non-finite value or numerical breakdown."""


class DataError(SddError):
    """Unusable input data: parse failures, missing coverage, degenerate signals."""


class CheckpointError(SddError):
    """Malformed or incompatible checkpoint file."""


class ConfigError(SddError):
    """Invalid run configuration."""

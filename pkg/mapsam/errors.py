"""
Errors Module
Exception hierarchy shared by every MapSAM subpackage
"""


class MapSAMError(Exception):
    """Base class for all MapSAM errors"""


class ShapeError(MapSAMError):
    """Raised when tensor or grid dimensions do not agree"""


class NumericError(MapSAMError):
    """Raised on NaN inputs or a NaN loss"""


class SingularityError(NumericError):
    """Raised when a DoRA direction matrix has a zero-norm column"""


class TapeError(MapSAMError):
    """Raised when backward() is called without a valid scalar loss or recorded tape"""


class PromptError(MapSAMError):
    """Raised for invalid point prompts"""


class OptimizerError(MapSAMError):
    """Raised when a trainable parameter reaches the optimizer without a gradient"""


class ConfigError(MapSAMError):
    """Raised for invalid or inconsistent run configuration"""


class DataError(MapSAMError):
    """Raised for missing, unreadable or inconsistent dataset files"""


class CheckpointError(DataError):
    """Raised when a checkpoint cannot be read or does not match the run"""

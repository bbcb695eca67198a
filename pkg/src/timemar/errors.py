"""Exception hierarchy shared across the package."""


class TimemarError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(TimemarError):
    """Invalid configuration; maps to CLI exit code 2."""


class DataError(TimemarError):
    """Malformed input data (CSV parsing, shape mismatches)."""


class CheckpointError(TimemarError):
    """Unreadable or corrupt checkpoint file."""


class CheckpointVersionError(CheckpointError):
    """Checkpoint format version is not supported."""


class TrainingDiverged(TimemarError):
    """A loss term became non-finite during training."""

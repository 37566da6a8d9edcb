"""
Error types raised across the toolkit.

Every error derives from SparseMetaError so the CLI can report any failure
uniformly; the more specific classes also derive from the matching builtin
so callers catching ValueError / ArithmeticError keep working.
"""

from typing import Optional


class SparseMetaError(Exception):
    """Base class for all toolkit errors"""


class DimensionError(SparseMetaError, ValueError):
    """Tensor shapes do not line up"""


class NumericError(SparseMetaError, ArithmeticError):
    """A computation produced NaN or Inf"""


class InvariantError(SparseMetaError):
    """A documented precondition or invariant was violated"""


class ConfigError(SparseMetaError, ValueError):
    """Experiment configuration could not be parsed or validated"""

    def __init__(self, message: str, key: Optional[str] = None):
        self.key = key
        super().__init__(f"{key}: {message}" if key else message)


class TaskSourceError(SparseMetaError, ValueError):
    """A task source cannot be built or cannot serve the requested episode"""


class CheckpointError(SparseMetaError):
    """Checkpoint file could not be read"""


class BadMagicError(CheckpointError):
    """File does not start with the checkpoint magic bytes"""


class VersionMismatchError(CheckpointError):
    """Checkpoint was written by an unsupported format version"""


class TruncatedCheckpointError(CheckpointError):
    """Checkpoint ended before all declared content was read"""


class MetricsError(SparseMetaError, ValueError):
    """Metrics file is malformed"""

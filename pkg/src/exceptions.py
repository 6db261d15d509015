"""Exception hierarchy shared by every layer of the package.

Each exception carries the process exit code the command-line entry point
reports when it escapes a command:

- ``1``: usage errors (bad configuration, shape or index contracts)
- ``2``: data errors (unreadable, malformed or inconsistent input files)
- ``3``: numeric failures (degenerate vectors, non-finite values, failed checks)

Every class also derives from the closest builtin so callers may catch
``ValueError`` or ``ArithmeticError`` without importing this module.
"""

from __future__ import annotations

from typing import TYPE_CHECKING, ClassVar

if TYPE_CHECKING:
    from .modeling.params import ModelParams


class RCMLError(Exception):
    """Base class for all package errors."""

    exit_code: ClassVar[int] = 1


# Usage


class ConfigurationError(RCMLError, ValueError):
    """Invalid or inconsistent configuration value."""


class ShapeError(RCMLError, ValueError):
    """Tensor shapes do not satisfy an operation's contract."""


class BoundsError(RCMLError, IndexError):
    """An index falls outside the valid range."""


class TapeError(RCMLError, RuntimeError):
    """Gradient tape misuse, e.g. ``backward`` without an active tape."""


# Data


class DataError(RCMLError):
    exit_code: ClassVar[int] = 2


class ParseError(DataError, ValueError):
    """A dataset line does not match its schema.

    Attributes
    ----------
    path : str
        File being parsed
    line_number : int
        1-based line number of the offending line

    """

    def __init__(self, path: str, line_number: int, reason: str) -> None:
        self.path = path
        self.line_number = line_number
        super().__init__(f"{path}:{line_number}: {reason}")


class IntegrityError(DataError, ValueError):
    """Records reference each other inconsistently (e.g. a dangling edge)."""


class VocabularyError(DataError, ValueError):
    """A token ID or word is outside the vocabulary."""


class FormatError(DataError, ValueError):
    """A token sequence violates the EOT format."""


class InsufficientNegativesError(DataError):
    """Fewer eligible negatives than requested for an anchor."""


class CheckpointError(DataError):
    """A checkpoint file is missing, unreadable or of an unknown version."""


# Numeric


class NumericError(RCMLError, ArithmeticError):
    exit_code: ClassVar[int] = 3


class DegenerateVectorError(NumericError):
    """A vector is too close to zero to normalize."""


class EmptyAttentionError(NumericError):
    """Every position of an attention row is padded."""


class DeterminismError(NumericError):
    """A function returned different values for identical inputs."""


class ContractError(NumericError):
    """Inputs violate a numeric precondition (e.g. non-unit embeddings)."""


class TrainingDivergedError(NumericError):
    """Training produced a non-finite loss.

    Attributes
    ----------
    last_good : ModelParams | None
        Parameters from the best validation epoch seen before divergence

    """

    def __init__(self, message: str, last_good: ModelParams | None = None) -> None:
        super().__init__(message)
        self.last_good = last_good

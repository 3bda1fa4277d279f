"""Exception hierarchy shared across the package.

Every error carries an ``exit_code`` so the CLI can map failures onto its
documented exit codes: 2 for usage/config problems, 3 for data or checkpoint
problems, 4 for numeric failures.
"""

from __future__ import annotations


class PolyclError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class ConfigError(PolyclError):
    """Invalid configuration, CLI usage, or parameter value."""

    exit_code = 2


class InvalidRatioError(ConfigError):
    """Augmentation ratio outside [0, 1)."""


class NonPositiveTemperatureError(ConfigError):
    """Contrastive temperature must be strictly positive."""


class DataError(PolyclError):
    """Malformed or unusable input data (corpus, dataset, vocabulary)."""

    exit_code = 3


class SmilesSyntaxError(DataError):
    """Rejected polymer-SMILES text.

    ``offset`` is the byte offset of the offending character in the input
    string (0-based).
    """

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (offset {offset})")
        self.offset = offset


class ValenceError(DataError):
    """Atom exceeds its standard valence (strict parsing mode only)."""


class EmptyResultError(DataError):
    """An operation would produce an empty token sequence."""


class EmptySetError(DataError):
    """A metric was requested over an empty collection."""


class TooFewPointsError(DataError):
    """Uniformity needs at least two embeddings."""


class SequenceTooLongError(DataError):
    """Token sequence does not fit the encoder's maximum length."""


class UnknownTokenIdError(DataError):
    """Token id outside the vocabulary range."""


class CheckpointError(DataError):
    """Unreadable, truncated, or corrupted checkpoint file."""


class ConstantTargetError(DataError):
    """R-squared is undefined for a constant target vector."""


class DatasetTooSmallError(DataError):
    """Property dataset too small for the requested cross-validation."""


class NumericError(PolyclError):
    """Numeric failure during training or evaluation."""

    exit_code = 4


class NonFiniteLossError(NumericError):
    """Loss or gradient became NaN/inf; the run is aborted."""


class ZeroVectorError(NumericError):
    """Vector with near-zero norm where a direction is required."""

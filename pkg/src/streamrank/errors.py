"""Exception hierarchy shared by all streamrank modules."""


class StreamRankError(Exception):
    """Base class for every error raised by this package."""


class ParseError(StreamRankError):
    """A row or file could not be parsed."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ValidationError(StreamRankError):
    """Structurally parsed input violates an invariant."""


class UnknownRegion(StreamRankError):
    """Region id does not exist in the loaded hierarchy."""


class UnknownIndicator(StreamRankError):
    """Indicator id has no data in the store."""


class EmptyStream(StreamRankError):
    """Operation requires at least one observation."""


class InsufficientContext(StreamRankError):
    """A detector lacks the history it needs at the requested day."""


class InsufficientHistory(StreamRankError):
    """Threshold ranking needs at least two historical statistics."""


class EmptyReference(StreamRankError):
    """No reference values could be pooled for the requested day."""


class DegenerateLabels(StreamRankError):
    """Binary labels are all-positive or all-negative."""


class LengthMismatch(StreamRankError):
    """Paired rank vectors differ in length."""


class ConstantVector(StreamRankError):
    """A rank vector has no variation, so correlation is undefined."""


class SpecError(StreamRankError):
    """Synthetic corpus specification is invalid."""


class ConfigError(StreamRankError):
    """Run configuration is invalid (CLI exit status 2)."""


class DataError(StreamRankError):
    """Input data is invalid or missing (CLI exit status 3)."""


class StorageError(StreamRankError):
    """Label store could not persist a record."""

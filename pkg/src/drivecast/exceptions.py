"""Shared exception types."""


class DataError(ValueError):
    """Corrupt or inconsistent input data (overlaps, clock inconsistencies)."""


class InsufficientHistoryError(RuntimeError):
    """A model or structure was queried before it had seen enough data."""


class DivergenceError(RuntimeError):
    """A learning update produced non-finite state (learning rate too large)."""


class ConfigError(ValueError):
    """Run configuration violates the documented schema."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class MissingArtifactError(FileNotFoundError):
    """A pipeline stage was started before its inputs exist."""

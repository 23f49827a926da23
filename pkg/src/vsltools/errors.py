"""Exception types shared across the toolkit."""
from __future__ import annotations


class VslError(Exception):
    """Base class for all toolkit errors."""


class EmptyLayout(VslError):
    """A layout (or every layout of a sequence) contains no usable boxes."""


class BadFrameCount(VslError):
    """Requested dense frame count is smaller than the keyframe count."""


class CanvasMismatch(VslError):
    """Two layouts that must share a canvas do not."""


class ProjectorMiss(VslError):
    """A file-backed label projector has no vector for the requested label."""

    def __init__(self, label: str):
        super().__init__(f"no embedding for label {label!r}")
        self.label = label


class DimMismatch(VslError):
    """Embedding dimensionality differs between query and database."""


class InsufficientCandidates(VslError):
    """More examples requested than the database holds."""


class SchemaError(VslError):
    """A serialized artifact does not match its expected schema."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class VslParseError(VslError):
    """Base class for structured-response parsing failures."""


class MissingLayoutBlock(VslParseError):
    """No layout block could be located in the response text."""


class MalformedBox(VslParseError):
    """A box line carries non-numeric or non-positive-size coordinates."""


class DuplicateIdInFrame(VslParseError):
    """The same object identifier occurs twice within one keyframe."""


class ProviderError(VslError):
    """A chat provider failed (HTTP error, auth, rate limiting, bad payload)."""

    def __init__(self, message: str, status: int | None = None,
                 retry_after: float | None = None):
        super().__init__(message)
        self.status = status
        self.retry_after = retry_after


class ExhaustedRetries(VslError):
    """Every planning attempt produced an unparseable response."""

    def __init__(self, message: str, attempts: int, last_error: Exception | None = None):
        super().__init__(message)
        self.attempts = attempts
        self.last_error = last_error


class RuleViolation(VslError):
    """An augmentation was requested that the domain's policy forbids."""

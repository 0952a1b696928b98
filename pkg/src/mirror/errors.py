"""Exception types shared across the pipeline."""


class MirrorError(Exception):
    """Base class for all errors raised by this package."""


class MalformedExport(MirrorError):
    """An export file could not be parsed as any supported variant."""


class EmptyExport(MirrorError):
    """An export file yielded zero events."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class AmbiguousExport(MirrorError):
    """Files match more than one platform signature."""


class UnknownExport(MirrorError):
    """Files match no platform signature."""


class ProviderUnavailable(MirrorError):
    """A metadata or embedding provider cannot be reached."""


class RateLimited(MirrorError):
    """A provider asked us to back off."""

    def __init__(self, message="rate limited", retry_after=None):
        super().__init__(message)
        self.retry_after = retry_after


class EmbeddingAborted(MirrorError):
    """Embedding stopped partway; carries the items embedded so far."""

    def __init__(self, message, partial):
        super().__init__(message)
        self.partial = partial


class TooFewPoints(MirrorError):
    """Not enough points for the requested neighbor count."""


class ConceptEmbedFailed(MirrorError):
    """An axis concept could not be embedded."""


class NotFound(MirrorError):
    """Dataset or artifact does not exist."""


class StageIncomplete(MirrorError):
    """A pipeline stage was requested before it completed."""


class StageOrderViolation(MirrorError):
    """Attempted a backward stage transition."""


class DatasetLocked(MirrorError):
    """Another writer holds the dataset lock."""

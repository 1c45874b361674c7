"""Exception hierarchy for the irag pipeline.

Every failure mode callers are expected to handle has a dedicated type;
generic exceptions are reserved for programming errors.
"""
from __future__ import annotations


class IragError(Exception):
    """Base class for all irag errors."""


class ConfigError(IragError):
    """Invalid configuration (bad flag combination, unknown format tag, ...)."""


class ParseError(IragError):
    """Fatal error while decoding or parsing an issue export."""

    def __init__(self, message: str, byte_offset: int | None = None):
        if byte_offset is not None:
            message = f"{message} (byte offset {byte_offset})"
        super().__init__(message)
        self.byte_offset = byte_offset


class EmptyCorpusError(IragError):
    """An index build was attempted over zero chunks."""


class IndexFormatError(IragError):
    """The file is not an irag index (bad magic or malformed header)."""


class IndexVersionError(IndexFormatError):
    """The index was written with an unsupported format version."""

    def __init__(self, found: int, supported: int):
        super().__init__(
            f"index format_version {found} is not supported (reader supports "
            f"{supported}); rebuild the index with `irag index build`"
        )
        self.found = found
        self.supported = supported


class IndexIntegrityError(IragError):
    """A structurally valid index file failed an internal consistency check."""

    def __init__(self, message: str, section: str | None = None):
        if section is not None:
            message = f"{message} [section: {section}]"
        super().__init__(message)
        self.section = section


class DimensionMismatchError(IndexIntegrityError):
    """Vector dimensions disagree (across batches, or query vs index)."""


class GatewayError(IragError):
    """The model gateway failed after exhausting retries."""

    def __init__(self, message: str, status: int | None = None, body: str = ""):
        if status is not None:
            message = f"{message} (HTTP {status})"
        if body:
            message = f"{message}: {body[:500]}"
        super().__init__(message)
        self.status = status
        self.body = body[:500]


class GatewayTimeoutError(GatewayError):
    """The gateway did not answer within the configured timeout."""


class JudgeInvalidError(IragError):
    """The judge produced no parseable in-scale verdict after all attempts."""

    def __init__(self, message: str, raw: str = ""):
        super().__init__(message)
        self.raw = raw


class RetrievalError(IragError):
    """Retrieval could not produce a context (embedding failure etc.)."""


class GenerationError(IragError):
    """The answering model produced no parseable output after repair attempts."""

    def __init__(self, message: str, raw: str = ""):
        super().__init__(message)
        self.raw = raw


class DatasetError(IragError):
    """A QA dataset file violates its schema."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"{message} (line {line})"
        super().__init__(message)
        self.line = line

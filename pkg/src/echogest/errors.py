"""Exception hierarchy for the echogest pipeline.

Every error raised on purpose by this package derives from EchogestError so
callers (and the CLI) can separate domain failures from genuine bugs.
"""


class EchogestError(Exception):
    """Base class for all errors raised by echogest."""


class PreconditionError(EchogestError, ValueError):
    """An operation was called with arguments violating its contract."""


class AlignmentError(EchogestError):
    """Microphone streams are unequal in length or not frame-aligned."""


class InsufficientDataError(EchogestError):
    """Fewer samples/frames than the operation needs."""


class RegistryError(EchogestError, KeyError):
    """Unknown gesture label or malformed label registry."""


class NumericError(EchogestError, FloatingPointError):
    """Non-finite values appeared where finite math was required."""


class ProtocolError(EchogestError):
    """Evaluation-protocol violation (e.g. test participant seen in training)."""


class FormatError(EchogestError):
    """Base class for binary file-format errors."""


class BadMagicError(FormatError):
    """File does not start with the expected magic bytes."""


class VersionError(FormatError):
    """File carries an unsupported format version."""


class TruncatedFileError(FormatError):
    """File ends before the header-declared payload is complete."""

"""Exception taxonomy shared across the package.

Every error the library raises deliberately derives from ProtostreamError so
callers (and the CLI) can map failures to exit codes without matching on
messages. InternalError is reserved for broken invariants that indicate a bug
rather than bad input.
"""


class ProtostreamError(Exception):
    """Base class for all deliberate errors raised by this package."""


class ZeroVector(ProtostreamError):
    """A feature vector with (near-)zero norm; signals a corrupt export."""


class DimensionMismatch(ProtostreamError):
    """Vector or matrix dimension does not match the model's dimension."""


class UnknownClass(ProtostreamError):
    """A class id was referenced before any sample of it was seen."""


class EmptyModel(ProtostreamError):
    """Inference was requested from a learner that has seen no training data."""


class SingleClass(ProtostreamError):
    """A runner-up class was required but the model knows only one class."""


class NotPositiveDefinite(ProtostreamError):
    """The regularized covariance failed its symmetric positive-definite solve."""


class DomainError(ProtostreamError):
    """An argument is outside its mathematical domain (e.g. nonpositive runtime)."""


class ManifestMissingField(ProtostreamError):
    """The manifest lacks a field required by the requested operation."""


class BadMagic(ProtostreamError):
    """A binary file does not start with the expected magic bytes."""


class VersionUnsupported(ProtostreamError):
    """A file declares a format version or dtype this build cannot read."""


class TruncatedPayload(ProtostreamError):
    """A binary payload is shorter than its header promises."""


class DanglingRowIndex(ProtostreamError):
    """A manifest row_index does not resolve to a feature-file row."""


class InternalError(ProtostreamError):
    """An internal invariant was violated; indicates a bug, not bad input."""

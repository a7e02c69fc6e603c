"""Exception types raised across the toolkit.

Every error the library raises on purpose derives from GenMetricsError, so
callers can catch one base class at CLI boundaries and map it to a data-error
exit code.
"""


class GenMetricsError(Exception):
    """Base class for all toolkit errors."""


# --- image pipeline ---------------------------------------------------------

class MalformedImageError(GenMetricsError):
    """Byte stream is not a decodable image of the stated format."""


class UnsupportedPixelLayoutError(GenMetricsError):
    """Decodable image, but a pixel layout we refuse (16-bit, CMYK, ...)."""


class ZeroDimensionError(GenMetricsError):
    """Requested output width or height below 1."""


class WrongStorageError(GenMetricsError):
    """Operation received a buffer in the wrong storage representation."""


class UnknownBackboneError(GenMetricsError):
    """Backbone name not present in the registry."""


# --- feature store ----------------------------------------------------------

class IoFailureError(GenMetricsError):
    """Underlying read/write failed."""


class BadMagicError(GenMetricsError):
    """File does not start with the GMF1 magic."""


class VersionMismatchError(GenMetricsError):
    """GMF1 header declares a format version we do not speak."""


class TruncatedPayloadError(GenMetricsError):
    """GMF1 payload shorter than the header promises."""


class NonFiniteValueError(GenMetricsError):
    """NaN or Inf encountered where finite values are required."""


class TooFewSamplesError(GenMetricsError):
    """Moment summary requires at least two samples."""


# --- metrics ----------------------------------------------------------------

class DimensionMismatchError(GenMetricsError):
    """Feature dimensions of the two operands differ."""


class NonConvergentEigensolveError(GenMetricsError):
    """Symmetric eigendecomposition failed to converge."""


class EmptyChunkError(GenMetricsError):
    """Classifier-score split produced an empty chunk."""


class KTooLargeError(GenMetricsError):
    """Neighbor count k must be smaller than the sample count."""


class LabelMismatchError(GenMetricsError):
    """The two labeled sets do not cover the same classes."""


class ClassTooSmallError(GenMetricsError):
    """A class has fewer than two samples on one side."""

    def __init__(self, class_id: int, side: str):
        self.class_id = class_id
        super().__init__(f"class {class_id} has fewer than 2 samples in the {side} set")


class LabelOutOfRangeError(GenMetricsError):
    """A label is outside [0, K)."""


# --- analysis ---------------------------------------------------------------

class FractionTooSmallError(GenMetricsError):
    """A sampling fraction yields fewer than two rows."""


class HeterogeneousReportsError(GenMetricsError):
    """Reports passed to ranking disagree on backbone or metric names."""


# --- cli --------------------------------------------------------------------

class MissingReferenceDeclarationError(GenMetricsError):
    """Metrics command requires a reference split declaration (name + count)."""

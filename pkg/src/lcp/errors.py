"""Exception hierarchy for the lcp package.

Every error raised by the library derives from :class:`LcpError`, so callers
can catch one type at an API boundary.  The CLI maps subfamilies to exit
codes (see ``lcp.cli``).
"""


class LcpError(Exception):
    """Base class for all lcp errors."""


# --- frame / model validation ------------------------------------------------

class NonFiniteCoordinate(LcpError):
    """A coordinate is NaN or infinite."""


class DimensionMismatch(LcpError):
    """Rows of differing width, or incompatible dimensionality between frames."""


# --- quantization ------------------------------------------------------------

class NonPositiveErrorBound(LcpError):
    """The requested error bound is zero or negative."""


class QuantRangeOverflow(LcpError):
    """Quantized integers would exceed the representable range.

    Raised when the coordinate span divided by the bin width does not fit
    the integer budget, or when the error bound is so small relative to the
    value magnitude that the bound cannot be honoured in float64.
    """


# --- lossless coding ---------------------------------------------------------

class EmptyInput(LcpError):
    """An operation that needs at least one symbol received none."""


class CorruptStream(LcpError):
    """A coded stream or payload failed structural validation."""


class CountMismatch(LcpError):
    """A stream's recorded symbol count differs from the expected count."""


# --- temporal codec ----------------------------------------------------------

class ParticleCountMismatch(LcpError):
    """Current and reference frames hold different particle counts."""


# --- archive / container -----------------------------------------------------

class FrameNotFound(LcpError):
    """The requested frame index is outside the archive."""


class SinkFailure(LcpError):
    """Writing the container to its sink failed."""


class BadMagic(LcpError):
    """The file does not start with the container magic."""


class UnsupportedVersion(LcpError):
    """The container version is unknown to this build."""


class ChecksumMismatch(LcpError):
    """A stored checksum does not match the data, or the file is truncated."""


# --- metrics -----------------------------------------------------------------

class ShapeMismatch(LcpError):
    """Original and reconstructed datasets have different shapes."""


class ZeroRange(LcpError):
    """PSNR is undefined: the original data has zero value range."""

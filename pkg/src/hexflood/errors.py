"""Exception types shared across the package.

Kept deliberately flat: callers that need to map failures onto process
exit codes (see cli) only have to distinguish a handful of categories.
"""


class ParseError(ValueError):
    """Malformed input text. Carries the 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class OutOfBoundsError(ValueError):
    """A requested sample point falls outside the raster bounding box."""


class DataGapError(ValueError):
    """A required raster node carries the nodata sentinel."""


class ResourceLimitError(RuntimeError):
    """A requested grid or run is too large to attempt."""


class ProviderError(RuntimeError):
    """Base class for elevation provider failures."""


class ProviderUnavailableError(ProviderError):
    """Transport failure that persisted through all retries."""


class ProtocolError(ProviderError):
    """The provider answered, but not with what was asked for."""

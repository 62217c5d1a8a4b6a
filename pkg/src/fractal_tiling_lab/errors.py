"""Exception hierarchy. CLI maps ConfigError to exit 3, PreconditionError to exit 2."""


class FtlError(Exception):
    """Base class for all library errors."""


class ConfigError(FtlError):
    """Malformed scene/IFS description or invalid arguments."""


class PreconditionError(FtlError):
    """A formula's structural hypothesis failed; carries the diagnostic."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class ResolutionError(FtlError):
    """Grid too small/large for the requested computation (bbox contact, cell cap)."""

"""Exception types shared across the package."""


class EnzChannelError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(EnzChannelError, ValueError):
    """A physical or numerical parameter is outside its valid domain."""


class ConfigurationError(EnzChannelError, ValueError):
    """A configuration document or simulation setup violates an invariant.

    ``field`` names the offending entry (dotted path) when known.
    """

    def __init__(self, message: str, field: str | None = None):
        self.field = field
        if field:
            message = f"{field}: {message}"
        super().__init__(message)


class GridMismatchError(EnzChannelError, ValueError):
    """Two series that must share a time grid do not."""

class MapCacheError(Exception):
    """Base class for all errors raised by mapcache."""


class DataError(MapCacheError, ValueError):
    """Input data is malformed or outside an operation's domain."""


class ParseError(DataError):
    """A trace or table line could not be parsed."""

    def __init__(self, message, lineno=None):
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
        self.lineno = lineno

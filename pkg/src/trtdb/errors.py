"""Exception hierarchy for the trtdb engine.

Every error raised on purpose by this package derives from TrtError so
embedders can catch one type at the boundary.
"""


class TrtError(Exception):
    """Base class for all trtdb errors."""


class ContractViolation(TrtError):
    """A documented precondition was violated by the caller."""


class EndOfStream(TrtError):
    """A bit reader was asked to read past the end of its buffer."""


class CorruptData(TrtError):
    """Stored bytes do not decode to a well-formed structure."""


class SeriesNotFound(TrtError):
    """The named series does not exist in the store."""


class SeriesExists(TrtError):
    """A series with this name already exists (series are immutable)."""


class SchemaError(TrtError):
    """A row or configuration does not match the series schema."""


class FlushError(TrtError):
    """Writing a block to disk failed; in-memory state is unchanged."""


class EmptyAggregate(TrtError):
    """An aggregate that needs at least one row saw an empty range."""


class MappingError(TrtError):
    """A model mapping file failed to parse or validate."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class QuerySyntaxError(TrtError):
    """The query text is not valid under the supported grammar."""

    def __init__(self, message, line=None, column=None):
        if line is not None:
            message = f"{message} (at line {line}, column {column})"
        super().__init__(message)
        self.line = line
        self.column = column


class UnsupportedFeature(TrtError):
    """The query uses a construct outside the supported subset."""


class QueryError(TrtError):
    """A semantic error while planning or executing a query."""

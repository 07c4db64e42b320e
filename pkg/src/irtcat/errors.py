"""Exception and warning types shared across the package."""


class IrtCatError(Exception):
    """Base class for all package errors."""


class EmptyDatasetError(IrtCatError):
    """Nothing survived min-support filtering; calibration cannot proceed."""


class EmptyResponsesError(IrtCatError):
    """Ability estimation requires at least one graded response."""


class PoolExhaustedError(IrtCatError):
    """No unadministered candidate items remain."""


class EmptyConceptPoolError(IrtCatError):
    """A concept filter matched no items in the pool."""


class UnknownPoolError(IrtCatError):
    """A pool reference did not resolve to a loaded pool."""


class SessionStoppedError(IrtCatError):
    """The session has already stopped; no further grades are accepted."""


class WrongStateError(IrtCatError):
    """Operation submitted in a non-matching session state (e.g. double grade)."""


class SessionNotFinishedError(IrtCatError):
    """A diagnostic report was requested before every session stopped."""


class CorruptLogError(IrtCatError):
    """A session event log violates the engine's invariants."""


class ParseError(IrtCatError):
    """A data file could not be parsed. Carries the 1-based line number."""

    def __init__(self, line_number: int, message: str):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class SchemaError(IrtCatError):
    """A persisted file is structurally readable but violates the schema."""


class VersionMismatchError(IrtCatError):
    """A persisted file declares an unsupported format version."""


class BothEmptyError(IrtCatError):
    """Jaccard similarity is undefined when both sets are empty."""


class PoolTooSmallError(IrtCatError):
    """The pool has fewer items than the requested number of test steps."""


class EndpointUnreachableError(IrtCatError):
    """The configured examinee answer endpoint could not be reached."""


class DuplicateLogWarning(UserWarning):
    """Duplicate (examinee, question) pairs were dropped during ingestion."""

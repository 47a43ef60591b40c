"""Exception hierarchy shared across the toolkit.

Every module raises subclasses of CCSegError so the CLI can map failures
to stable exit codes (usage 2, not-found 1, network 3, data integrity 4).
"""


class CCSegError(Exception):
    """Base class for all toolkit errors."""


class DataError(CCSegError):
    """Malformed or inconsistent input data (exit code 4)."""


class NetworkError(CCSegError):
    """Remote retrieval failure (exit code 3)."""


class NotFoundError(CCSegError):
    """A requested key or resource does not exist (exit code 1)."""


class UsageError(CCSegError):
    """Caller violated an interface precondition (exit code 2)."""

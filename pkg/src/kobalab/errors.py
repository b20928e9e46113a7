class KobalabError(Exception):
    """Base class for errors raised by kobalab operations."""


class DimensionError(KobalabError, ValueError):
    pass


class SingularMapError(KobalabError, ValueError):
    pass


class PreconditionError(KobalabError, ValueError):
    """An operation was called outside its domain of validity."""


class BoundarySearchError(KobalabError, RuntimeError):
    pass


class BudgetExhausted(KobalabError, RuntimeError):
    """A search ran out of budget; ``partial`` holds the best result found."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial

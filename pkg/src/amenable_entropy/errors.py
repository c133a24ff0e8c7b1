"""Exception hierarchy shared by every module."""


class DomainError(ValueError):
    """An argument lies outside the domain of an operation."""


class GroupMismatchError(DomainError):
    """Operands belong to different groups (or are not group elements)."""


class ResourceLimitError(RuntimeError):
    """A configured enumeration or cardinality cap was exceeded."""

    def __init__(self, message, *, attempted=None, cap=None):
        super().__init__(message)
        self.attempted = attempted
        self.cap = cap


class UnsupportedError(NotImplementedError):
    """The requested parameter combination has no implementation.

    Raised instead of silently falling back to an approximation.
    """

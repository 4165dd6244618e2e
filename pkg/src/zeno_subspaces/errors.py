"""Exception hierarchy shared by all modules."""


class ZenoError(ValueError):
    """Base class for errors raised by this package."""


class ContractViolation(ZenoError):
    """An input breaks a structural precondition (hermiticity, dimensions, ...)."""


class EmptySpaceError(ZenoError):
    """An operation was asked to work on a zero-dimensional space."""


class InvalidInputError(ZenoError):
    """Non-finite entries or out-of-range parameters."""

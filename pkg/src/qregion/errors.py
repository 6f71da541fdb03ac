"""Exception hierarchy shared by all modules.

Every error is a ``ValueError`` subclass so callers that only care about
"bad input" can catch one type; the CLI maps :class:`CapacityError` to a
distinct exit code.
"""


class QRegionError(ValueError):
    """Base class for all package errors."""


class LabelError(QRegionError):
    """Unknown, duplicated or overlapping subsystem labels."""


class DimensionError(QRegionError):
    """Operands whose dimensions do not match."""


class InvariantError(QRegionError):
    """A state, distribution or set function violates its invariants."""


class DomainError(QRegionError):
    """A scalar argument outside its admissible range."""


class CapacityError(QRegionError):
    """The request exceeds the desk-scale limits of the dense implementation."""


class StateFormatError(QRegionError):
    """Malformed serialized state; the message starts with the offending field path."""

"""Exception hierarchy shared by every module.

The CLI maps these onto exit codes: ``SpecParseError`` and bad flags -> 1,
``ResourceLimit`` -> 3, every other ``PolyrecError`` (contract violations,
failed searches, precision loss) -> 2.
"""


class PolyrecError(Exception):
    """Base class for all library errors."""


class ContractViolation(PolyrecError, ValueError):
    """An operation was called outside its documented preconditions."""


class ResourceLimit(PolyrecError):
    """A computation would exceed a configured memory or work budget."""


class PrecisionError(PolyrecError, ArithmeticError):
    """A floating point reconstruction strayed too far from an integer."""


class NotFound(PolyrecError):
    """A bounded search finished without finding a witness."""


class SpecParseError(PolyrecError, ValueError):
    """A structured-set or file specification could not be parsed."""

"""Executable polynomial recurrence: profiles, Weyl sums, major arcs, smooth cutoffs, constructions."""

from .core import DenseSet, GridSet, Polynomial
from .errors import (
    ContractViolation,
    NotFound,
    PolyrecError,
    PrecisionError,
    ResourceLimit,
    SpecParseError,
)
from .weyl import TorusPoint

__all__ = [
    "ContractViolation",
    "DenseSet",
    "GridSet",
    "NotFound",
    "Polynomial",
    "PolyrecError",
    "PrecisionError",
    "ResourceLimit",
    "SpecParseError",
    "TorusPoint",
]

"""Oscillation and variation seminorms of parameterized families, polynomial
ergodic averages on lattices, projection families and their compositions."""

from .seminorms import (DomainError, IncreasingSequence, ParamFamily, SeminormValue, convergence_certificate,
                        jump_count, oscillation, overlap_jump_count, sup_oscillation, sup_oscillation_multiparam,
                        variation)

__version__ = "0.1.0"

__all__ = [
    "DomainError", "IncreasingSequence", "ParamFamily", "SeminormValue", "convergence_certificate",
    "jump_count", "oscillation", "overlap_jump_count", "sup_oscillation", "sup_oscillation_multiparam",
    "variation",
]

"""Computations in Outer space: marked graphs, Lipschitz distances, folding paths,
free factor projections and flaring experiments for subgroups of Out(F_r)."""

from .automorphisms import Automorphism, OutElement, out_equal
from .errors import BudgetError, DomainError, OuterSpaceError
from .graphs import (LogScalar, MarkedGraph, act, candidates, lipschitz_distance, rose,
                     symmetrized_distance, theta)
from .words import Basis, CyclicWord, Word

__version__ = "0.1.0"

__all__ = [
    "Automorphism", "Basis", "BudgetError", "CyclicWord", "DomainError", "LogScalar",
    "MarkedGraph", "OutElement", "OuterSpaceError", "Word", "act", "candidates",
    "lipschitz_distance", "out_equal", "rose", "symmetrized_distance", "theta",
]

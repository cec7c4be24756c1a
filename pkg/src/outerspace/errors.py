"""Exception hierarchy.

Domain errors map to CLI exit status 1, budget errors to exit status 2.
"""


class OuterSpaceError(Exception):
    """Base class for all package errors."""

    code = "error"

    def to_json(self):
        return {"error": self.code, "message": str(self)}


class DomainError(OuterSpaceError):
    code = "domain-error"


class BudgetError(OuterSpaceError):
    code = "budget-exceeded"


class TrivialClass(DomainError):
    code = "trivial-class"


class NotAnAutomorphism(DomainError):
    code = "not-an-automorphism"


class InvalidGraph(DomainError):
    code = "invalid-graph"


class OptimalityGap(DomainError):
    code = "optimality-gap"

    def __init__(self, best, target):
        super().__init__(f"best Lipschitz constant {best} exceeds certificate {target}")
        self.best = best
        self.target = target


class NotTense(DomainError):
    code = "not-tense"


class NotTrainTrack(DomainError):
    code = "not-train-track"


class NotIllegalEndpoint(DomainError):
    code = "not-illegal-endpoint"


class TrivialSubgroup(DomainError):
    code = "trivial-subgroup"


class RankTooSmall(DomainError):
    code = "rank-too-small"


class EmptySet(DomainError):
    code = "empty-set"


class InvalidSubgroup(DomainError):
    code = "invalid-subgroup"


class SpanTooShort(DomainError):
    code = "span-too-short"


class NotFiniteOrder(DomainError):
    code = "not-finite-order"


class NonUnimodular(DomainError):
    code = "non-unimodular"


class DifferentFibers(DomainError):
    code = "different-fibers"


class NotGeodesic(DomainError):
    code = "not-geodesic"


class NoGeodesicOfLength(DomainError):
    code = "no-geodesic-of-length"


class BudgetExceeded(BudgetError):
    code = "budget-exceeded"


class SearchBudgetExceeded(BudgetError):
    code = "search-budget-exceeded"


class EventCapExceeded(BudgetError):
    code = "event-cap-exceeded"


class BallTooSmall(BudgetError):
    code = "ball-too-small"

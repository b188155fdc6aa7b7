"""Exception hierarchy.

The CLI maps these onto distinct exit statuses, so the split between
precondition problems, search exhaustion and invariant failures matters.
"""


class PolylabelError(Exception):
    pass


class PreconditionError(PolylabelError, ValueError):
    """Input violates an operation's stated precondition."""


class DomainError(PreconditionError):
    """A point lies outside the family's domain, or has the wrong dimension."""


class SearchExhausted(PolylabelError):
    """A randomized search ran out of budget.  Never a proof of nonexistence."""


class SamplingExhausted(SearchExhausted):
    pass


class UnsupportedDegree(PolylabelError):
    """Exact root snapping needs degree <= 2 along the search line."""


class GridInvalid(PolylabelError):
    """A grid tuple failed one of the four sign conditions exactly."""

    def __init__(self, tuple_, i, j, s, condition, message=""):
        self.tuple = tuple_
        self.i = i
        self.j = j
        self.s = s
        self.condition = condition
        super().__init__(
            message or f"tuple {tuple_}: condition ({condition}) fails at i={i}, j={j}, s={s}"
        )


class Undecodable(PolylabelError):
    pass


class InvariantViolation(PolylabelError, AssertionError):
    """An exact re-verification failed.  Indicates a bug, never tolerated."""


class PerturbationExhausted(InvariantViolation):
    pass

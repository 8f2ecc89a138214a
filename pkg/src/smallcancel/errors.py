"""Exception hierarchy shared across the library.

Every failure mode that callers are expected to handle gets its own class;
generic ``ValueError``/``RuntimeError`` are reserved for programming errors.
"""


class SmallCancelError(Exception):
    """Base class for all library errors."""


class ValidationError(SmallCancelError):
    """Malformed input: bad path, non-reduced word, domain mismatch, ..."""


class BudgetError(SmallCancelError):
    """A search or enumeration budget was exhausted before completion.

    Carries ``explored``, the number of states visited before giving up,
    so partial progress is never mistaken for a completed run.
    """

    def __init__(self, message, explored=None):
        super().__init__(message)
        self.explored = explored


class CertificationError(SmallCancelError):
    """A result cannot be certified within the available data.

    Raised e.g. when a relator oracle is queried beyond its certified
    length bound, or a family probe bound is too small to decide a piece.
    """


class UncertifiedRegionError(CertificationError):
    """A metric query left the region of a Cayley ball with exact distances."""


class ConstructionError(SmallCancelError):
    """A family builder could not satisfy its stated inequalities."""


class PreconditionError(SmallCancelError):
    """A documented operation precondition does not hold; names the clause."""


class ClassificationViolation(SmallCancelError):
    """A diagram satisfying a classification theorem's hypotheses matched no
    shape.  This is the theorem-falsification channel and must never fire on
    correct inputs."""

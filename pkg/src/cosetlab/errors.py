"""Exception types raised across the package."""


class CosetlabError(ValueError):
    """Base class for domain errors (bad input, violated precondition)."""


class LimitExceeded(CosetlabError):
    """An exhaustive computation would exceed its configured size cap."""


class SingularMatrix(CosetlabError):
    """A matrix expected to be invertible over F_q is singular."""

"""Exception types shared across the package."""


class ForrelabError(Exception):
    """Base class for all package errors."""


class ShapeError(ForrelabError, ValueError):
    """Input arrays have the wrong length or mismatched dimensions."""


class DomainError(ForrelabError, ValueError):
    """A parameter lies outside the domain an operation is defined on."""


class ResourceError(ForrelabError, RuntimeError):
    """A size guard was exceeded (brute force, symbolic extraction, statevectors)."""


class PreconditionError(ForrelabError, ValueError):
    """An input violates a documented precondition (unbalanced, unbounded, ...)."""


class DegenerateQueryError(ForrelabError, ValueError):
    """A queried test vector is linearly dependent on earlier queries."""


class ConvergenceError(ForrelabError, RuntimeError):
    """An iterative preprocessing loop hit its iteration cap."""

"""Exception hierarchy shared by all modules."""


class ClusterForgeError(Exception):
    """Base class for every error raised by this package."""


class CapacityError(ClusterForgeError):
    """Requested size exceeds a hard enumeration cap."""


class ArgumentError(ClusterForgeError, ValueError):
    """Malformed or inconsistent arguments."""


class SingularityError(ClusterForgeError, ZeroDivisionError):
    """An algebraic inverse does not exist."""


class ModelError(ClusterForgeError):
    """The model violates a structural requirement (stability, summability)."""


class PreconditionError(ClusterForgeError):
    """A documented precondition of an operation does not hold."""


class InconsistencyError(ClusterForgeError):
    """A proven bound was violated: either a bug or a failed assumption."""

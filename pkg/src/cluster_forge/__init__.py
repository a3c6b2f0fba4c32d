"""Cluster expansions on discrete, continuum, lattice-polymer and quantum models."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ArgumentError,
    CapacityError,
    ClusterForgeError,
    InconsistencyError,
    ModelError,
    PreconditionError,
    SingularityError,
)
from .kernels import IMPLEMENTATION  # noqa: E402

__all__ = [
    "__version__",
    "IMPLEMENTATION",
    "ClusterForgeError",
    "ArgumentError",
    "CapacityError",
    "InconsistencyError",
    "ModelError",
    "PreconditionError",
    "SingularityError",
]

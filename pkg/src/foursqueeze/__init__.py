"""Four-mode squeezed states of two linearly coupled scalar fields."""

from .errors import (
    DomainError,
    FourSqueezeError,
    IntegrationError,
    ResourceError,
    SingularDecompositionError,
    TruncationWarning,
    ValidationError,
)
from .symplectic import (
    PARAM_NAMES,
    SqueezeRotParams,
    compose_bloch_messiah,
    decompose_bloch_messiah,
)

__version__ = "0.1.0"

__all__ = [
    "DomainError",
    "FourSqueezeError",
    "IntegrationError",
    "ResourceError",
    "SingularDecompositionError",
    "TruncationWarning",
    "ValidationError",
    "PARAM_NAMES",
    "SqueezeRotParams",
    "compose_bloch_messiah",
    "decompose_bloch_messiah",
]

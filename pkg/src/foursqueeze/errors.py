"""Exception hierarchy shared by all modules."""


class FourSqueezeError(Exception):
    """Base class for library errors."""


class DomainError(FourSqueezeError, ValueError):
    """An argument lies outside the domain of an operation."""


class ValidationError(FourSqueezeError, ValueError):
    """An object fails one of its structural invariants."""


class SingularDecompositionError(FourSqueezeError, ArithmeticError):
    """A factorization hits a branch point or a singular value."""


class IntegrationError(FourSqueezeError, ArithmeticError):
    """Time integration produced non-finite or unstable values."""

    def __init__(self, message, time=None):
        super().__init__(message if time is None else f"{message} (t={time!r})")
        self.time = time


class ResourceError(FourSqueezeError, MemoryError):
    """A requested table or operator exceeds the memory budget."""

    def __init__(self, message, suggested_cutoff=None):
        super().__init__(message)
        self.suggested_cutoff = suggested_cutoff


class TruncationWarning(UserWarning):
    """Norm leaked above a Fock-space cutoff beyond the requested threshold."""

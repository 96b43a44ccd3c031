"""Exception hierarchy shared by all modules."""


class LadderError(Exception):
    """Base class for library errors."""


class DomainError(LadderError, ValueError):
    """Invalid argument: bad spin, unknown mode, basis mismatch, unnormalized state."""


class ResourceError(LadderError):
    """Requested Hilbert space exceeds the configured dimension cap."""


class ResonanceError(LadderError):
    """A denominator of the effective Hamiltonian is (near) zero."""


class NumericalError(LadderError):
    """An iterative routine failed to reach its tolerance."""


class CapabilityError(LadderError):
    """Operation not available at this problem size."""


class DegeneracyError(LadderError):
    """Defective (non-diagonalizable) BdG problem."""


class DiagnosticError(LadderError):
    """A diagnostic quantity is undefined for the given inputs."""


class CollapseError(LadderError):
    """Finite-size curves do not overlap after rescaling."""

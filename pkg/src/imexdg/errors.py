"""Exception types raised by the solver library."""


class ImexDGError(RuntimeError):
    """Base class for all library errors."""


class NonPhysicalState(ImexDGError):
    """A thermodynamic state violates admissibility (negative density, covolume, T <= 0)."""


class NoConvergence(ImexDGError):
    """An iterative procedure did not reach its tolerance."""


class IndefiniteOperator(ImexDGError):
    """Conjugate gradients met a direction with non-positive curvature."""


class DomainError(ImexDGError, ValueError):
    """Argument outside the mathematical domain of a function."""


class ZeroNorm(ImexDGError, ZeroDivisionError):
    """Relative error requested against a reference with zero norm."""


class UnsupportedIndicator(ImexDGError):
    """Refinement indicator incompatible with the selected equation of state."""


class VacuumFormation(ImexDGError):
    """Riemann data would generate vacuum."""


class CFLViolation(ImexDGError):
    """Explicit time step exceeds the stability bound."""

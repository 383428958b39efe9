"""Exception types shared across the package."""


class ThinFBError(Exception):
    """Base class for all package errors."""


class DomainError(ThinFBError):
    """A point or region leaves the computational cube."""


class ResolutionError(ThinFBError):
    """A requested radius is too small for the grid to resolve (r < 8h)."""


class EllipticityError(ThinFBError):
    """Coefficient matrix fails symmetry or uniform ellipticity."""


class SingularPointError(ThinFBError):
    """Evaluation requested at a singular point of a closed-form profile."""


class DegeneratePointError(ThinFBError):
    """A normalization denominator vanishes (zero boundary mass, etc.)."""


class NonconvergenceError(ThinFBError):
    """Iterative solver hit its iteration budget.

    Carries the last iterate and the residual history so callers can
    inspect or restart.
    """

    def __init__(self, message, solution=None, residual_history=None):
        super().__init__(message)
        self.solution = solution
        self.residual_history = residual_history

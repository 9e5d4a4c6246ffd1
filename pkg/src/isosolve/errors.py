"""Exception hierarchy shared by all pipeline stages."""


class IsosolveError(Exception):
    """Base class for all errors raised by this package."""


class ExpressionSyntaxError(IsosolveError):
    """A map or tensor expression could not be parsed."""


class ArityError(IsosolveError):
    """Component count or variable usage inconsistent with the declared (m, q)."""


class DomainError(IsosolveError):
    """Evaluation hit a singularity (log/division) inside the requested box."""


class WrongShapeError(IsosolveError):
    """Matrix dimensions incompatible with the critical-dimension setup N = q + 1."""


class RankDeficientError(IsosolveError):
    """Coefficient matrix dropped rank; kernel dimension exceeds one."""

    def __init__(self, message, location=None):
        super().__init__(message)
        self.location = location


class SignAmbiguousError(IsosolveError):
    """Adjacent kernel vectors nearly orthogonal; sign continuity unreliable."""

    def __init__(self, message, location=None):
        super().__init__(message)
        self.location = location


class TransversalityLostError(IsosolveError):
    """zeta^{alpha0} fell below the admissibility tolerance somewhere on the grid."""


class NotAdmissibleError(IsosolveError):
    """Map failed the admissibility check required by the critical-dimension pipeline."""


class NotFreeError(IsosolveError):
    """Map is not free (or q too small), so the free-map branch does not apply."""


class GridMismatchError(IsosolveError):
    """Two fields that must share a grid were sampled on different grids."""

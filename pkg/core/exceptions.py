"""Error hierarchy shared by every lab app."""


class LabError(Exception):
    """Base class for all lab failures."""


class DimensionMismatchError(LabError, ValueError):
    pass


class GridError(LabError, ValueError):
    pass


class SingularJacobianError(LabError):
    pass


class CompatibilityError(LabError):
    """A tangent element violates z^i_{x^j} x^j_s = z^i_s."""


class ConvergenceError(LabError):
    pass


class DegenerateLegendreError(LabError):
    """The Legendre transform is not invertible at the requested point."""


class NonConvexModelError(LabError):
    pass


class UnknownModelError(LabError, KeyError):
    pass


class InvalidParameterError(LabError, ValueError):
    pass


class CFLViolationError(LabError):
    pass


class BlowUpError(LabError):
    pass


class DomainError(LabError):
    """A curve lies outside the domain where a functional is defined."""


class ShootingError(ConvergenceError):
    pass


class FloorDominatedError(LabError):
    """Residuals sit at the discretization floor for every sweep point."""

    def __init__(self, message, floor=None):
        super().__init__(message)
        self.floor = floor


class ScenarioError(LabError):
    pass

"""Exception types shared across the package."""


class BrylinskiError(Exception):
    """Base class for package errors."""


class SpecError(BrylinskiError):
    """Invalid surface specification, parameters, or configuration."""


class NumericalError(BrylinskiError):
    """A numerical procedure failed to reach its target."""


class ToleranceError(NumericalError):
    """Requested tolerance not reached within the node budget."""


class RichardsonError(NumericalError):
    """Non-convergent Richardson extrapolation triangle."""

    def __init__(self, message, triangle=None):
        super().__init__(message)
        self.triangle = triangle


class ImmersionError(BrylinskiError):
    """Tangent vectors degenerate at an evaluated point."""


class PoleGuardError(BrylinskiError):
    """Evaluation requested inside the guard radius of a pole."""

    def __init__(self, nearest_pole, distance):
        self.nearest_pole = nearest_pole
        self.distance = distance
        super().__init__(
            f"s is within the pole guard: |s - ({nearest_pole})| = {distance:.3e}")

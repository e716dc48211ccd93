"""Exception types shared across the package."""


class QesError(Exception):
    """Base class for all qesforge errors."""


class DegenerateDenominator(QesError):
    """A rational function was built or normalized with a (near-)zero denominator."""


class NearPole(QesError):
    """Evaluation requested too close to a pole of a rational function."""


class UnknownFrame(QesError, KeyError):
    """Requested basis frame is not in the catalog."""


class ValidationFailed(QesError):
    """A frame's coefficient arrays disagree with its closed-form samplers."""


class DegenerateState(QesError):
    """An ansatz with identically vanishing polynomial part was supplied."""


class NotFExpressible(QesError):
    """A potential's denominator has roots foreign to the frame function f."""


class NoConvergence(QesError):
    """No multistart trajectory reached the residual tolerance."""

    def __init__(self, message, best_residual=None):
        super().__init__(message)
        self.best_residual = best_residual


class UnknownEntry(QesError, KeyError):
    """Requested catalog entry does not exist."""


class BranchCollision(QesError):
    """Quadratic branch tracking hit a (near-)vanishing discriminant."""

    def __init__(self, message, events=()):
        super().__init__(message)
        self.events = tuple(events)


class NoRealBranch(QesError):
    """Both quadratic roots are complex on a problem declared real."""


class ComplexValuedOnInterval(QesError):
    """A function expected to be real on a real interval has a large imaginary part."""

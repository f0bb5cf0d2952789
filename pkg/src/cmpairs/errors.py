"""Exception types raised across the package."""


class CMPairsError(Exception):
    """Base class for all package errors."""


class SingularArgument(CMPairsError, ValueError):
    """An elliptic function was evaluated within the singular radius of a lattice point."""


class InvalidOrder(CMPairsError, ValueError):
    pass


class StepSizeUnderflow(CMPairsError, ArithmeticError):
    """The adaptive step collapsed; usually a near-collision or a blow-up."""

    def __init__(self, msg, t=None, h=None):
        super().__init__(msg)
        self.t = t
        self.h = h


class EpsilonTooSmall(CMPairsError, ValueError):
    pass


class OddParticleCount(CMPairsError, ValueError):
    pass


class LengthMismatch(CMPairsError, ValueError):
    pass


class NoConvergence(CMPairsError, ArithmeticError):
    pass


class ConfigInvalid(CMPairsError, ValueError):
    pass


class AccuracyWarning(UserWarning):
    """The q-series truncation hit its cap before reaching double precision."""

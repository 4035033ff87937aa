"""Exception hierarchy shared by every module."""


class CycleGlauberError(Exception):
    """Base class for all errors raised by this package."""


class InvalidSize(CycleGlauberError, ValueError):
    pass


class InvalidCoupling(CycleGlauberError, ValueError):
    pass


class DimensionMismatch(CycleGlauberError, ValueError):
    pass


class IndexOutOfRange(CycleGlauberError, IndexError):
    pass


class InvalidInput(CycleGlauberError, ValueError):
    pass


class ZeroMatrix(CycleGlauberError, ValueError):
    """All couplings vanish, so the reduced matrix is identically zero."""


class NotDifferentiableHere(CycleGlauberError, ValueError):
    pass


class RequiresPositiveCouplings(CycleGlauberError, ValueError):
    pass


class NoConvergence(CycleGlauberError, RuntimeError):
    def __init__(self, message, residual=float("nan")):
        super().__init__(message)
        self.residual = residual


class NumericalFailure(CycleGlauberError, RuntimeError):
    pass


class TooLarge(CycleGlauberError, ValueError):
    pass


class ClosureViolation(CycleGlauberError, RuntimeError):
    """The action of the chain on linear functions left the linear span."""


class InsufficientData(CycleGlauberError, ValueError):
    pass

"""Semantic exception hierarchy shared by all frontlab modules."""


class FrontLabError(Exception):
    """Base class for all frontlab errors."""


class DomainError(FrontLabError):
    """An argument lies outside the mathematical domain of an operation."""


class ConfigurationError(FrontLabError):
    """A precondition on grids, brackets, tolerances, or config data failed."""


class UnsupportedOperationError(FrontLabError):
    """The operation is not defined for this operator kind."""


class NoRootError(DomainError):
    """The characteristic equation has no real root at the requested speed."""


class FrontAbsentError(FrontLabError):
    """A field does not cross the requested tracking level."""


class InstabilityError(FrontLabError):
    """The evolved field escaped its admissible range (blow-up diagnostic)."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class InconclusiveError(FrontLabError):
    """An integration hit its step cap before reaching a verdict."""


class NonconvergenceError(FrontLabError):
    """An iterative solver stagnated before meeting its tolerance."""


class UnclassifiedDecayError(FrontLabError):
    """A fitted tail rate matches none of the admissible candidates."""

    def __init__(self, message, lambda_hat=None, candidates=None):
        super().__init__(message)
        self.lambda_hat = lambda_hat
        self.candidates = candidates or {}


class RejectedParamsError(FrontLabError):
    """Super-solution parameters violate their construction constraints."""


class AssumptionViolationError(FrontLabError):
    """The requested bracket does not satisfy the selection assumptions."""


class FamilyMisspecificationError(ConfigurationError):
    """Minimal-speed search exceeded its growth cap; family likely invalid."""

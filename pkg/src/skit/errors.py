"""Exception hierarchy shared by every skit module."""


class SkitError(Exception):
    """Base class for all skit errors."""


class InvalidInput(SkitError, ValueError):
    """Malformed measures, matrices or configuration."""


class NegativeWeight(InvalidInput):
    pass


class ZeroTotalMass(InvalidInput):
    pass


class NotNormalized(InvalidInput):
    pass


class ShapeMismatch(InvalidInput):
    pass


class IncompatibleMarginals(InvalidInput):
    """A marginal charges a row/column that the reference measure does not."""


class InfeasibleMarginals(InvalidInput):
    pass


class NotAbsolutelyContinuous(SkitError):
    """The coupling charges a cell where the reference measure vanishes."""


class DomainError(SkitError, ValueError):
    pass


class NotInvertible(SkitError):
    """Raised when a derivative inverse or conjugate is requested for a non-convex h."""


class InconsistentSpec(SkitError):
    pass


class BracketFailure(SkitError):
    pass


class NotConverged(SkitError):
    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class NonFinite(SkitError):
    pass


class CycleOffSupport(SkitError):
    pass


class NoImprovement(SkitError):
    pass


class EmptySupport(SkitError):
    pass


class RegimeMismatch(SkitError):
    pass


class TooLarge(SkitError):
    pass


class UnboundedOrInfeasible(SkitError):
    pass

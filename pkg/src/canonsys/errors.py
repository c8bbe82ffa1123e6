"""Exception and warning classes shared across the package."""


class CanonSysError(Exception):
    """Base class for all package errors."""


class ModelError(CanonSysError):
    """Invalid Hamiltonian description or evaluation outside its domain."""


class NonPositiveTime(ModelError):
    pass


class ModelDomainError(ModelError):
    pass


class NotLimitPoint(ModelError):
    pass


class NotMonotone(ModelError):
    pass


class NotTraceNormalized(ModelError):
    pass


class ZeroDiagonalPrimitive(ModelError):
    pass


class RangeError(ModelError):
    pass


class ModeAssumptionViolated(ModelError):
    pass


class NoDegenerateStart(ModelError):
    pass


class QuadratureFailure(CanonSysError):
    pass


class BracketFailure(CanonSysError):
    pass


class StepFailure(CanonSysError):
    pass


class IntervalValidation(CanonSysError):
    pass


class ArcGeometryError(CanonSysError):
    pass


class NoConvergence(CanonSysError):
    """Weyl disc did not shrink below tolerance; ``sample`` holds the best result."""

    def __init__(self, message, sample=None):
        super().__init__(message)
        self.sample = sample


class SamplingUnstable(UserWarning):
    """Sampled preimage measure changed by more than 5% under refinement."""

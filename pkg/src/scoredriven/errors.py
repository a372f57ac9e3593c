"""Exception hierarchy shared across the package."""


class ScoreDrivenError(Exception):
    """Base class for all package errors."""


class UnknownDistribution(ScoreDrivenError):
    pass


class DimensionUnsupported(ScoreDrivenError):
    pass


class SupportViolation(ScoreDrivenError):
    """Observation outside the support of the conditional distribution."""

    def __init__(self, msg, index=None):
        super().__init__(msg)
        self.index = index


class ParamOutOfBounds(ScoreDrivenError):
    pass


class ScalingUnsupported(ScoreDrivenError):
    pass


class MultivariateUnsupported(ScoreDrivenError):
    pass


class MomentUndefined(ScoreDrivenError):
    pass


class SingularInformation(ScoreDrivenError):
    pass


class NonFiniteState(ScoreDrivenError):
    """Filter / simulation state left the numerically safe region."""

    def __init__(self, msg, index=None, coordinate=None):
        super().__init__(msg)
        self.index = index
        self.coordinate = coordinate


class ShapeMismatch(ScoreDrivenError):
    pass


class NoConvergence(ScoreDrivenError):
    pass


class HessianNotPD(ScoreDrivenError):
    pass


class InvalidHorizon(ScoreDrivenError):
    pass


class DrawsUnavailable(ScoreDrivenError):
    pass


class InvalidGrid(ScoreDrivenError):
    pass


class NonMonotoneCdf(ScoreDrivenError):
    pass


class ZeroVarianceDifferential(ScoreDrivenError):
    pass


class LengthMismatch(ScoreDrivenError):
    pass


class EmptyInput(ScoreDrivenError):
    pass

"""Exception types raised by the predictors and calculators."""


class SingularSystem(ValueError):
    """The ridge normal-equation matrix X'X + aI is (numerically) singular."""


class NotSymmetric(ValueError):
    """A matrix that must be symmetric is not, within tolerance."""


class DomainError(ValueError):
    """An argument lies outside the domain of the function."""


class TooFewSamples(ValueError):
    pass


class IrregularConfiguration(ValueError):
    """The diversity condition fails, so the analytic ray predictor does not apply.

    Callers can fall back to the grid predictor.
    """


class EmptyIntersection(ValueError):
    """Upper and lower CRR rays do not intersect."""

    def __init__(self, message, lower_ray=None, upper_ray=None):
        super().__init__(message)
        self.lower_ray = lower_ray
        self.upper_ray = upper_ray

class BornFrontError(Exception):
    """Base class for solver errors."""


class DomainError(BornFrontError, ValueError):
    pass


class NotClassifiable(BornFrontError):
    pass


class HypothesisHViolated(BornFrontError):
    """The reaction is not linearly controlled at 0 and 1."""


class StiffnessFailure(BornFrontError):
    def __init__(self, message, last_v=None):
        super().__init__(message)
        self.last_v = last_v


class BracketFailure(BornFrontError):
    pass


class NotAdmissible(BornFrontError):
    pass


class QuadratureFailure(BornFrontError):
    pass


class NoPrediction(BornFrontError):
    """The asymptotic regime has no established limit for this reaction."""


class InsufficientData(BornFrontError):
    pass


class DomainMismatch(BornFrontError):
    pass

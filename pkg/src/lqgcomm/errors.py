"""Exception types raised by the library."""


class LqgcommError(Exception):
    """Base class for all library errors."""


class DimensionMismatch(LqgcommError):
    pass


class NotControllable(LqgcommError):
    pass


class NotObservable(LqgcommError):
    pass


class NotPositiveDefinite(LqgcommError):
    pass


class NotPSD(LqgcommError):
    pass


class NoConvergence(LqgcommError):
    pass


class SingularInnerMatrix(LqgcommError):
    pass


class Unstable(LqgcommError):
    pass


class InfeasibleBudget(LqgcommError):
    pass


class PowerExceedsBudget(LqgcommError):
    pass


class TooShort(LqgcommError):
    pass


class ScenarioParseError(LqgcommError):
    """Scenario file could not be parsed; carries the offending location."""

    def __init__(self, message, line=None, field=None):
        super().__init__(message)
        self.line = line
        self.field = field

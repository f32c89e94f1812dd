"""Exception hierarchy.

Two families matter to callers: ``InvalidInput`` (bad arguments, violated
preconditions) and ``NumericalFailure`` (a computation that could not meet its
tolerance). The CLI maps them to exit codes 2 and 3 respectively.
"""


class PaffineError(Exception):
    """Base class for all package errors."""


class InvalidInput(PaffineError, ValueError):
    pass


class NumericalFailure(PaffineError, ArithmeticError):
    pass


class DomainError(InvalidInput):
    pass


class InvalidBody(InvalidInput):
    pass


class CenterNotInterior(InvalidInput):
    pass


class PointNotInterior(InvalidInput):
    pass


class NotSmooth(InvalidInput):
    pass


class OutOfSlab(InvalidInput):
    pass


class SingularMap(InvalidInput):
    pass


class Unsupported(InvalidInput):
    pass


class LevelBelowMinimum(InvalidInput):
    pass


class PreconditionViolated(InvalidInput):
    pass


class CapTooLarge(InvalidInput):
    pass


class SymmetryRequired(InvalidInput):
    pass


class ToleranceNotMet(NumericalFailure):
    pass


class NoConvergence(NumericalFailure):
    pass


class IllConditionedFit(NumericalFailure):
    pass


class IntegralDiverged(NumericalFailure):
    pass


class DenominatorUnderflow(NumericalFailure):
    pass

"""Exception types raised across the package."""


class MGPIError(Exception):
    """Base class for all package errors."""


class GameValidationError(MGPIError, ValueError):
    """A game description violates one or more model invariants.

    ``violations`` is a list of ``(kind, message)`` pairs where ``kind`` is one
    of ``NonstochasticRow``, ``RewardOutOfRange``, ``DiscountOutOfRange``,
    ``DanglingSuccessor``, ``MissingTriple``, ``DuplicateEntry``,
    ``UnknownTriple`` or ``Malformed``.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        lines = [f"{kind}: {msg}" for kind, msg in self.violations]
        super().__init__("invalid game:\n  " + "\n  ".join(lines))

    @property
    def kinds(self):
        return {kind for kind, _ in self.violations}


class DimensionMismatch(MGPIError, ValueError):
    pass


class SingularSystem(MGPIError, ArithmeticError):
    pass


class NumericalFailure(MGPIError, ArithmeticError):
    pass


class ParameterOutOfRange(MGPIError, ValueError):
    pass


class RankDeficient(MGPIError, ValueError):
    pass


class AssumptionViolated(MGPIError, ValueError):
    pass


class MaxItersExceeded(MGPIError, RuntimeError):
    """Iteration budget ran out; the last iterate and trace are attached."""

    def __init__(self, message, value=None, trace=None):
        super().__init__(message)
        self.value = value
        self.trace = trace

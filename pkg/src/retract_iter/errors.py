"""Exception hierarchy shared by all modules."""


class RetractIterError(Exception):
    """Base class for every error raised by the package."""


class InvalidInputError(RetractIterError, ValueError):
    """Arguments violate a documented precondition."""


class UnsupportedDimensionError(InvalidInputError):
    pass


class DomainViolationError(RetractIterError, ValueError):
    """A mapping was evaluated outside its domain; retract first."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class NumericalError(RetractIterError, ArithmeticError):
    """An iterate or mapping value became non-finite."""

    def __init__(self, message, n=None):
        super().__init__(message)
        self.n = n


class NotFoundError(RetractIterError, LookupError):
    pass


class EvaluationError(RetractIterError, ArithmeticError):
    """Expression evaluation hit a domain error (log of 0, division by 0, ...)."""

    def __init__(self, message, position):
        super().__init__(f"{message} (at offset {position})")
        self.position = position

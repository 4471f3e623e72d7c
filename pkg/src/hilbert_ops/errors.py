"""Exception hierarchy shared by every module."""


class HilbertOpsError(Exception):
    """Base class for all library errors."""


class ConformabilityError(HilbertOpsError, ValueError):
    """Operands have incompatible lengths or dimensions."""


class PreconditionError(HilbertOpsError, ValueError):
    """An input violates a documented precondition."""


class DegeneracyError(HilbertOpsError, ValueError):
    """A linear system is singular or too ill-conditioned to solve exactly."""

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class NumericalError(HilbertOpsError, ArithmeticError):
    """Non-finite values or a failed numerical routine."""


class DivergenceError(NumericalError):
    """A simulated trajectory left the admissible region."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step

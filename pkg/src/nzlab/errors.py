"""Exception hierarchy shared by all modules."""


class NZLError(Exception):
    """Base class for every error raised by nzlab."""


class DomainError(NZLError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class PoleError(DomainError):
    """Evaluation requested at a pole."""


class ResourceError(NZLError, RuntimeError):
    """An enumeration or allocation would exceed a configured cap."""


class EvaluationError(NZLError, ArithmeticError):
    """Non-finite value produced while evaluating an integrand."""

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class ConsistencyError(NZLError, ArithmeticError):
    """An internal consistency check (realness, symmetry, ...) failed."""


class ConstructionError(NZLError, RuntimeError):
    """An auxiliary object could not be constructed."""


class BlowUpError(NZLError, FloatingPointError):
    """A simulated trajectory left the finite floating-point range."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step

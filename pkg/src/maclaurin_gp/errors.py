"""Exception types raised across the package."""


class InputError(ValueError):
    """Invalid argument shape, value or file content."""


class CapacityError(InputError):
    """A requested feature map would exceed the supported size."""


class NumericalError(ArithmeticError):
    """A factorization failed even after jitter escalation."""

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition

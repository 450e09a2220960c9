"""Exception types shared across the package."""


class MFPropError(Exception):
    """Base class for numerical failures raised by this package."""


class ConvergenceError(MFPropError):
    """An iterative solve did not reach its tolerance within its budget."""

    def __init__(self, message: str, *, iterations: int | None = None,
                 last_value: float | None = None):
        super().__init__(message)
        self.iterations = iterations
        self.last_value = last_value


class UnsupportedActivationError(MFPropError):
    """An operation requires activation properties the nonlinearity lacks."""


class DegenerateGeometryError(MFPropError):
    """A geometric quantity is undefined for the given data."""

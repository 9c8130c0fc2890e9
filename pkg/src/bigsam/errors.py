"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Raised when a solver or run configuration is invalid (bad step sizes,
    inadmissible parameters, inconsistent problem data)."""


class NumericalError(RuntimeError):
    """Raised when a run produces non-finite values or otherwise breaks down.

    Carries the iteration index at which the failure was detected, when known.
    """

    def __init__(self, message: str, iteration: int | None = None):
        if iteration is not None:
            message = f"{message} (iteration {iteration})"
        super().__init__(message)
        self.iteration = iteration


class MatrixParseError(ValueError):
    """Raised when a matrix file cannot be parsed; names the offending line."""

    def __init__(self, path, line_number: int, message: str):
        super().__init__(f"{path}:{line_number}: {message}")
        self.path = path
        self.line_number = line_number

"""Exception types shared across the package."""


class SpillnetError(Exception):
    """Base class for all package-specific failures."""


class ConfigError(SpillnetError):
    """Invalid run configuration (CLI exit code 1)."""


class DataError(SpillnetError):
    """Input data failed validation (CLI exit code 2)."""


class EstimationError(SpillnetError):
    """Numerical estimation failure (CLI exit code 3)."""


class ConvergenceError(EstimationError):
    """Coordinate descent ran out of sweeps.

    Carries the last iterate and the final maximum coefficient change so
    callers can see how close the solver got.
    """

    def __init__(self, message, last_coefficients, gap):
        super().__init__(message)
        self.last_coefficients = last_coefficients
        self.gap = gap

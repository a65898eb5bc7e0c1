"""Polar occupancy exceptions for better error handling."""


class PolarOccError(Exception):
    """Base exception for all polar occupancy errors."""

    pass


class ConfigError(PolarOccError):
    """Raised when shapes, kernels or grid settings are inconsistent."""

    pass


class ConfigValidationError(ConfigError):
    """Raised when a configuration file fails validation."""

    def __init__(self, key: str, reason: str):
        super().__init__(f"Invalid config value for '{key}': {reason}")
        self.key = key
        self.reason = reason


class DimensionError(ConfigError):
    """Raised when two operands have incompatible shapes."""

    def __init__(self, operation: str, left: tuple, right: tuple):
        super().__init__(f"{operation}: incompatible shapes {tuple(left)} and {tuple(right)}")
        self.operation = operation
        self.left = tuple(left)
        self.right = tuple(right)


class NumericError(PolarOccError):
    """Raised when a computation sees NaN or non-finite values."""

    pass


class DataError(PolarOccError):
    """Raised when input data is malformed or out of range."""

    pass


class TrainingError(PolarOccError):
    """Raised when training has to abort."""

    def __init__(self, step: int, detail: str):
        super().__init__(f"Training aborted at step {step}: {detail}")
        self.step = step
        self.detail = detail

"""Exception types shared across the package."""


class DomainError(ValueError):
    """An input lies outside the domain of an operation (empty data, bad width, ...)."""


class IntegrationError(ArithmeticError):
    """A signal generator produced a non-finite state."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class NumericalError(ArithmeticError):
    """Non-recoverable numerical failure inside the decomposition engine."""

    def __init__(self, message, sample=None, mode=None):
        super().__init__(message)
        self.sample = sample
        self.mode = mode


class ConfigError(ValueError):
    """Invalid experiment configuration. ``field`` names the offending key."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field

class RkbsLabError(Exception):
    pass


class ConfigError(RkbsLabError, ValueError):
    """Invalid user input; ``key`` names the offending config entry when known."""

    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key


class NumericalError(RkbsLabError, ArithmeticError):
    """A factorization or solver failed (e.g. Cholesky after jitter escalation)."""


class ConvergenceError(NumericalError):
    pass

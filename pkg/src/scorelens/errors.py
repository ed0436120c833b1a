"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2, DataError -> 3,
ConvergenceError -> 4.
"""


class ScorelensError(Exception):
    """Base class for all package errors."""


class ConfigError(ScorelensError):
    """Invalid configuration file, plan, or hyperparameter grid."""


class DataError(ScorelensError):
    """Malformed or contract-violating input data."""


class ConvergenceError(ScorelensError):
    """An iterative fit failed to converge within its cap."""

    def __init__(self, message, diagnostic=None):
        super().__init__(message)
        self.diagnostic = diagnostic

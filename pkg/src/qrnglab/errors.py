"""Exception types shared across the package."""


class QrngLabError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(QrngLabError):
    """Invalid or malformed run configuration."""


class ConvergenceError(QrngLabError):
    """A numerical procedure failed to reach its target accuracy."""

    def __init__(self, message, context=None):
        super().__init__(message)
        self.context = context


class FitError(QrngLabError):
    """Parameter fit did not converge; carries the last iterate."""

    def __init__(self, message, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate


class UnfittableError(FitError):
    """Input data cannot support a fit (e.g. a clipped histogram)."""

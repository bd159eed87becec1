"""Exception types shared across the package."""


class ChaintrackError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(ChaintrackError):
    """Inputs, files or configuration violate a documented contract."""


class NumericalError(ChaintrackError):
    """A numerical procedure failed (non-PSD covariance, no convergence, ...)."""

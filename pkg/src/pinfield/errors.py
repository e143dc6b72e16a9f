"""Exception types shared across the package."""


class PinfieldError(Exception):
    """Base class for package errors."""


class VolumeTooLargeError(PinfieldError):
    """Exact enumeration requested beyond the subset-expansion cutoff."""


class FactorizationError(PinfieldError):
    """Cholesky failed: the assembled matrix is not positive definite."""


class QuadratureError(PinfieldError):
    """Adaptive quadrature of a single-site mass did not converge."""


class EnvelopeViolationError(PinfieldError):
    """Rejection envelope exceeded: the potential's curvature floor is wrong."""


class NonStabilizingSweepError(PinfieldError):
    """Per-site constants failed to stabilize over the requested volume sweep."""


class ConfigError(PinfieldError):
    """Invalid or unknown run configuration."""

"""Exception types shared across the package."""


class RotsymError(Exception):
    """Base class for all package-specific errors."""


class CapabilityError(RotsymError):
    """Requested a configuration the implementation does not tabulate."""


class IntegrationFailureError(RotsymError):
    """Adaptive ODE stepping failed to converge."""


class IdentifiabilityError(RotsymError):
    """The fitting problem is rank-deficient beyond its structural gauge."""


class NonconvergenceError(RotsymError):
    """Iteration budget exhausted before reaching tolerance.

    Carries the best iterate found so far in ``best``.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class ResolutionError(RotsymError):
    """Grid too coarse for the requested spectral/temporal content."""


class PrecisionError(RotsymError):
    """Quadrature or truncation could not reach the requested tolerance."""


class RangeError(RotsymError):
    """Requested window exceeds the available data range."""


class RegionValidityError(RotsymError):
    """Barrier region violates a validity condition (e.g. H too small)."""


class PreconditionError(RotsymError):
    """Input violates a documented operation precondition."""

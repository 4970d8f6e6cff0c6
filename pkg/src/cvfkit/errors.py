"""Exception types shared across the package."""


class CvfkitError(Exception):
    """Base class for all package-specific errors."""


class Infeasible(CvfkitError):
    """The linear program has no feasible point in the box.

    For a calibration LP this usually means the Monte Carlo draw set is
    too small, or the statistic cannot be made similar on this grid.
    """


class NumericalFailure(CvfkitError):
    """Pivoting stalled beyond the iteration cap, or a basis went singular."""


class DegenerateSample(CvfkitError):
    """A sample is too degenerate for the requested statistic
    (zero regressor variation, singular residual covariance, ...)."""


class NoConvergence(CvfkitError):
    """Grid refinement hit the iteration cap with discrepancies outstanding."""

    def __init__(self, message, audit=None):
        super().__init__(message)
        self.audit = audit


class BadOverlay(CvfkitError):
    """An external power-curve CSV does not match the documented schema."""


class ConfigError(CvfkitError):
    """An experiment configuration key or value is invalid."""

"""Exception types shared across the package."""


class GeoflowError(Exception):
    """Base class for all package errors."""


class PositiveCurvature(GeoflowError):
    """A sampled curvature exceeded the nonpositivity tolerance.

    Carries the offending maximum and its chart location.
    """

    def __init__(self, max_curvature, location):
        self.max_curvature = max_curvature
        self.location = location
        super().__init__(f"sampled curvature {max_curvature:.6g} > 0 at {location}")


class IntegratorDiverged(GeoflowError):
    """Flow left every deck translate of the fundamental domain."""


class NotConverged(GeoflowError):
    """Two-seed Riccati bracket did not close below tolerance.

    Expected near flat regions; carries the bracket spread.
    """

    def __init__(self, spread, message=None):
        self.spread = spread
        super().__init__(message or f"curvature bracket spread {spread:.3g} above tolerance")


class NotHyperbolic(GeoflowError):
    """Group word whose matrix has |trace| <= 2 (no closed geodesic)."""


class NoConvergence(GeoflowError):
    """Closed-geodesic refinement failed to reach its gradient tolerance."""

    def __init__(self, iterations, grad_norm):
        self.iterations = iterations
        self.grad_norm = grad_norm
        super().__init__(f"refinement stalled after {iterations} iterations, |grad| = {grad_norm:.3g}")


class BudgetExceeded(GeoflowError):
    """Projected enumeration size above the configured cap."""


class IncompleteSpectrum(GeoflowError):
    """Periodic-orbit table does not cover the requested length window."""


class InsufficientSeparation(GeoflowError):
    """A separated set was too small for a reliable pressure estimate."""


class EmptyWindow(GeoflowError):
    """No periodic orbits in the requested length window."""


class NoProbesFound(GeoflowError):
    """Rejection sampling failed to place probes in a Bowen ball."""


class UnsupportedOperation(GeoflowError):
    """Operation not defined for this model kind (e.g. distances on synthetic models)."""

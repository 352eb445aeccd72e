"""Exception types shared across the package."""


class PeelkitError(Exception):
    """Base class for all package-specific errors."""


class UnsupportedOrderError(PeelkitError):
    """Requested h-function order outside the supported range."""


class DivergentSeriesError(PeelkitError):
    """An infinite-support family does not sum at the requested point."""


class SolverFailureError(PeelkitError):
    """Root finding failed to converge; distinct from a not-admissible verdict."""


class BoundaryNotFoundError(PeelkitError):
    """No critical scale exists inside the search bracket."""


class InconsistentCriticalityError(PeelkitError):
    """Kernel completion contradicts the claimed criticality of the input law."""


class RangeError(PeelkitError):
    """Requested index lies outside the materialized range."""

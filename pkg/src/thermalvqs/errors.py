"""Shared exception types."""


class CapacityError(ValueError):
    """Raised when a request would enumerate or densify beyond the size cap."""


class ValidationError(ValueError):
    """Raised when a numerical input fails a physical sanity check."""

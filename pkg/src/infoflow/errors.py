"""Exception types shared across the package."""


class CapacityError(Exception):
    """Raised when an exact computation would exceed the state-space cap."""

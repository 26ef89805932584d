"""Exception types raised across the package."""


class StateError(ValueError):
    """Input is not a valid state, tangent vector, basis or parameter."""


class BoundaryStateError(StateError):
    """State has an eigenvalue too close to zero for a log-dependent operation."""


class ConvergenceError(RuntimeError):
    """A numerical routine failed to reach its tolerance."""

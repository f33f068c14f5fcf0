class RobustMDPError(Exception):
    """Base class for package errors."""


class ShapeError(RobustMDPError, ValueError):
    """Array dimensions disagree with the model."""


class ConvergenceError(RobustMDPError, RuntimeError):
    """A bisection search exhausted its iteration budget."""

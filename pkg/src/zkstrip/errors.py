"""Shared exception types.

Exit-code mapping used by the CLI: ConfigurationError -> 2, BlowUpError -> 3,
tolerance failures -> 1.
"""


class ConfigurationError(ValueError):
    """Invalid configuration: bad parameter values, grids, or CFL violations."""


class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


class ShapeError(ValueError):
    """Array shape does not match the active basis or grid."""


class UnsupportedCaseError(ValueError):
    """Operation restricted to a subset of the boundary-condition families."""


class IdentityNotApplicableError(ValueError):
    """A conservation identity was requested for a run outside its regime."""


class TruncationError(RuntimeError):
    """Field does not decay sufficiently at the truncated grid ends."""


class BlowUpError(RuntimeError):
    """Solution became non-finite during time stepping."""

    def __init__(self, message, time=None, trajectory=None):
        super().__init__(message)
        self.time = time
        self.trajectory = trajectory

"""Exception hierarchy shared by all modules.

The CLI maps these onto process exit codes (see ``optolev.cli``).
"""


class OptolevError(Exception):
    """Base class for all package errors."""


class ConfigError(OptolevError, ValueError):
    """Bad, missing or out-of-range configuration value."""


class InstabilityError(OptolevError):
    """The linearized dynamics are unstable (or the trap is lost)."""


class SingularityError(OptolevError, ArithmeticError):
    """A normalisation factor of the closed-form theory vanishes on the grid."""

    def __init__(self, message, omega=None):
        super().__init__(message)
        self.omega = omega


class ConvergenceError(OptolevError):
    """An iterative solver did not reach its tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class TrapLossError(InstabilityError):
    """The stochastic simulation diverged (particle left the trap)."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time

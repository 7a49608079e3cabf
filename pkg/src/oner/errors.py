"""Exception and warning classes shared across the package."""


class OnerError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(OnerError, ValueError):
    """An argument violates a documented precondition."""


class UnsupportedSpinError(InvalidArgumentError):
    """Quadrupole coupling requested for a spin that has no quadrupole moment (I < 1)."""


class RegimeError(OnerError):
    """A separation-of-scales assumption is violated.

    ``ratio`` carries the offending scale ratio so callers can report it.
    """

    def __init__(self, message, ratio=None):
        super().__init__(message)
        self.ratio = ratio


class IntegrationError(OnerError):
    """An ODE integration failed; ``diagnostics`` holds solver state."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class ConvergenceError(OnerError):
    """An iterative procedure did not converge within its budget."""


class FitError(OnerError):
    """A least-squares fit could not be performed or found no signal."""


class RegimeWarning(RuntimeWarning):
    """A scale separation holds, but only marginally."""

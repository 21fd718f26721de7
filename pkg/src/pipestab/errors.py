"""Exception types shared across the package."""


class PipestabError(Exception):
    """Base class for all domain errors raised by this package."""


class ParameterError(PipestabError):
    """Invalid or inconsistent model/controller parameters."""


class InputError(PipestabError):
    """Malformed runtime input (bad samples, dimension mismatch, ...)."""


class ConfigError(PipestabError):
    """Invalid run configuration (CFL violation, bad config file, ...)."""


class DivergenceError(PipestabError):
    """Simulation produced non-finite values."""

    def __init__(self, step, message=None):
        self.step = step
        super().__init__(message or f"simulation diverged (non-finite values at step {step})")


class SolverFailure(PipestabError):
    """The semidefinite solver did not converge to a usable answer."""

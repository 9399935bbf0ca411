"""Exception hierarchy shared by the solvers and the CLI."""


class AnisokinError(Exception):
    """Base class for all package errors."""


class StructuralError(AnisokinError, ValueError):
    """Arrays do not fit the grid they claim to live on."""


class ParameterError(AnisokinError, ValueError):
    """A physical or numerical parameter violates its admissible range."""


class ConvergenceError(AnisokinError, RuntimeError):
    """An iterative solve stopped before reaching its tolerance."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class StepRejected(AnisokinError, RuntimeError):
    """A time step violates a stability bound (e.g. the advective CFL limit)."""

    def __init__(self, message, max_dt=None):
        super().__init__(message)
        self.max_dt = max_dt


class PicardError(ConvergenceError):
    """The per-step coupling iteration did not converge."""

    def __init__(self, message, residual=None, iterations=None, factor=None):
        super().__init__(message, residual, iterations)
        self.factor = factor


class SpectralError(AnisokinError, ValueError):
    """An operator expected to be semidefinite has a negative eigenvalue."""


class InvariantViolation(AnisokinError, RuntimeError):
    """An audited invariant (positivity, mass, incompressibility) failed."""


class ConfigError(AnisokinError, ValueError):
    """Configuration file could not be parsed or violates a constraint."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line

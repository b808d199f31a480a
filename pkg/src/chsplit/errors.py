"""Exception hierarchy."""


class SolverError(RuntimeError):
    """Base class for failures raised while advancing a field."""


class StepFailure(SolverError):
    """The nonlinear subflow ran out of its substep budget."""

    def __init__(self, message, delta):
        super().__init__(message)
        self.delta = delta


class DivergenceError(SolverError):
    """A non-finite value appeared in the solution."""


class MalformedSpectrumError(ValueError):
    """Spectral coefficients do not describe real-valued data."""


class ReferenceSolveError(SolverError):
    """The reference solution did not self-converge within its budget."""

    def __init__(self, message, trace):
        super().__init__(message)
        self.trace = trace


class ResolutionError(ValueError):
    """The kernel grid cannot resolve the multiplier tail."""

    def __init__(self, message, suggested_n_points):
        super().__init__(message)
        self.suggested_n_points = suggested_n_points


class FitError(ValueError):
    """Samples are too degenerate for a log-log fit."""


class ConfigError(ValueError):
    """Invalid configuration; ``path`` names the offending field."""

    def __init__(self, message, path=""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path

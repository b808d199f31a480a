"""Strang-split pseudo-spectral solver for the 1D periodic Cahn-Hilliard equation."""

from chsplit.errors import (
    ConfigError,
    DivergenceError,
    FitError,
    MalformedSpectrumError,
    ReferenceSolveError,
    ResolutionError,
    SolverError,
    StepFailure,
)
from chsplit.spectral import (
    Grid,
    RealField,
    SpectralField,
    dealiased_cube,
    project_mean_zero,
    spectral_derivative,
    to_real,
    to_spectral,
)
from chsplit.propagators import (
    LinearKind,
    SubflowKind,
    SubstepControl,
    imex_step,
    linear_step,
    nonlinear_subflow,
    one_step_nonlinear,
)
from chsplit.schemes import Scheme, SchemeConfig, Trajectory, TrajectoryRecord, run
from chsplit.diagnostics import DiagnosticsRecord, diagnose, energy, residual, sobolev_norm

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DiagnosticsRecord",
    "DivergenceError",
    "FitError",
    "Grid",
    "LinearKind",
    "MalformedSpectrumError",
    "RealField",
    "ReferenceSolveError",
    "ResolutionError",
    "Scheme",
    "SchemeConfig",
    "SolverError",
    "SpectralField",
    "StepFailure",
    "SubflowKind",
    "SubstepControl",
    "Trajectory",
    "TrajectoryRecord",
    "dealiased_cube",
    "diagnose",
    "energy",
    "imex_step",
    "linear_step",
    "nonlinear_subflow",
    "one_step_nonlinear",
    "project_mean_zero",
    "residual",
    "run",
    "sobolev_norm",
    "spectral_derivative",
    "to_real",
    "to_spectral",
]
